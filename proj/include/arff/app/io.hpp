#pragma once

#include "arff/arff.hpp"
#include "arff/mlp.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace arff::io {

inline constexpr int kSchemaVersion = 1;

/// Writes to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

/// %.17g; "nan", "inf", "-inf" for non-finite values.
std::string format_double(double value);
double parse_double(std::string_view text);

/// Comma-separated table with one header row. Fields never contain commas,
/// quotes or newlines.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(std::string_view name) const;  // throws if absent
  bool has_column(std::string_view name) const;
  double number(std::size_t row, std::string_view name) const;
  const std::string& text(std::size_t row, std::string_view name) const;
  void add_row(std::vector<std::string> fields);
  std::string str() const;
};

CsvTable parse_csv(std::string_view text);
CsvTable read_csv(const std::filesystem::path& path);

/// Per-iteration trace: iter, train_err, test_err, ess, resampled, accepts,
/// solves, train_mse, test_mse.
CsvTable trace_table(const std::vector<IterationRecord>& records);
std::vector<IterationRecord> parse_trace(const CsvTable& table);

/// FNV-1a over the raw bytes of the frequencies and amplitudes, as hex.
std::string state_digest(const FrequencySet& freqs, const AmplitudeVector& amplitudes);
/// Minima, argmins (iteration numbers), final values and the state digest.
nlohmann::json trace_summary(const TrainTrace& trace);

nlohmann::json stats_to_json(const NormalizationStats& stats);
NormalizationStats stats_from_json(const nlohmann::json& j);

struct ShallowModel {
  FrequencySet frequencies;
  AmplitudeVector amplitudes;
  ActivationKind activation = ActivationKind::kComplexExp;
  std::optional<NormalizationStats> stats;
};

/// Versioned model file: {"format": "arff-model", "version": 1, "kind": ...}.
nlohmann::json model_to_json(const ShallowModel& model);
nlohmann::json model_to_json(const MlpModel& model);
ShallowModel shallow_model_from_json(const nlohmann::json& j);
MlpModel mlp_model_from_json(const nlohmann::json& j);
std::string model_kind(const nlohmann::json& j);

/// Binary layout: "ARFFDS01", uint64 rows, uint64 input dim, uint64 channels,
/// inputs then outputs as column-major little-endian doubles. Normalization
/// stats and provenance go to `<path>.json`.
void save_dataset(const std::filesystem::path& path, const Dataset& data);
Dataset load_dataset(const std::filesystem::path& path);
std::filesystem::path sidecar_path(const std::filesystem::path& path);

/// Columns x1..xd, then y (one channel) or y1..yC.
CsvTable dataset_table(const Dataset& data);
Dataset dataset_from_table(const CsvTable& table, Provenance provenance = Provenance::kExternal);

/// epoch, train_mse, val_mse
CsvTable loss_curve_table(const std::vector<EpochRecord>& curve);
std::vector<EpochRecord> parse_loss_curve(const CsvTable& table);

}  // namespace arff::io
