#pragma once

#include "arff/app/image.hpp"
#include "arff/app/io.hpp"
#include "arff/arff.hpp"

#include <json.hpp>

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace arff {

enum class ExperimentKind { kStats, kFullData, kGamma, kBatch, kInit, kPretrain, kImage };

std::string_view to_string(ExperimentKind kind) noexcept;
ExperimentKind parse_experiment_kind(std::string_view text);

/// Batch-size entries: a positive count, kFullBatch (M_B = M) or kPowerBatch
/// (M_B = ceil(K^{3/2})).
inline constexpr Index kFullBatch = 0;
inline constexpr Index kPowerBatch = -1;
Index parse_batch_size(std::string_view text);
std::string batch_size_label(Index batch);
Index resolve_batch_size(Index batch, Index nodes, Index data_size);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::kFullData;

  // Target
  bool identity_rotation = false;
  double alpha = 0.01;

  // Sweep axes. `deltas` pairs with `nodes` (or has one entry); `batch_sizes`
  // pairs with `nodes` when `batch_paired`, otherwise it is its own axis.
  std::vector<Index> nodes{32, 64, 128};
  std::vector<double> deltas;
  std::vector<double> gammas{10.0};
  std::vector<Index> batch_sizes{kFullBatch};
  bool batch_paired = false;
  std::vector<double> init_stds{0.0};
  std::vector<Variant> variants{Variant::kAdaptiveMetropolis, Variant::kAdaptiveMetropolisResampling,
                                Variant::kRandomWalkResampling};

  Index iterations = 2000;
  double lambda = 0.1;
  Index data_size = 0;  // 0: M = K^2
  Index test_size = 1000;
  Index realizations = 1;
  std::uint64_t seed = 0;
  std::filesystem::path output = "out";
  unsigned threads = 1;

  // KDE snapshots (iterations at which [B^{-1} w]_j marginals are written).
  std::vector<Index> snapshot_iterations;
  std::vector<Index> kde_axes{0, 1};

  // Pretraining comparison
  Index pretrain_iterations = 300;
  Index adam_epochs = 400;
  Index adam_batch_size = 128;
  double adam_learning_rate = 5e-4;
  bool freeze_first_layer = false;

  // Image pipeline
  ImagePipelineConfig image;

  /// Throws ConfigError naming the offending field.
  void validate() const;
  TargetSpec target() const;
  /// delta for the i-th node count.
  double delta_for(std::size_t node_index) const;
};

/// Desk-scale (or published, with `paper_scale`) defaults for each kind.
ExperimentConfig default_experiment(ExperimentKind kind, bool paper_scale = false);

nlohmann::json to_json(const ExperimentConfig& config);

struct ExperimentOutcome {
  std::filesystem::path directory;
  std::vector<std::string> files;  // relative to directory, sorted
};

/// Runs the experiment and writes per-run traces, aggregates and
/// manifest.json under config.output. Wall-clock data go to timing.json only.
ExperimentOutcome run_experiment(const ExperimentConfig& config);

/// mean, sample std (zero for one value), mean -/+ 2 std.
struct SampleStats {
  double mean = 0.0;
  double std = 0.0;
  double lo = 0.0;
  double hi = 0.0;
};
SampleStats sample_stats(const std::vector<double>& values);

/// Recomputes every aggregate listed in a run directory's manifest from its
/// per-run traces; returns the largest absolute discrepancy.
double aggregate_discrepancy(const std::filesystem::path& directory);

/// Seed of realization r for node count K under the master seed.
std::uint64_t realization_seed(std::uint64_t master, Index nodes, Index realization);

/// Training and independent test data for one realization, both normalized
/// with the training statistics.
std::pair<Dataset, Dataset> realization_data(const TargetSpec& spec, Index data_size, Index test_size,
                                             std::uint64_t seed);

/// Zero frequencies for std 0, otherwise i.i.d. N(0, std^2) entries.
FrequencySet initial_frequencies(Index nodes, Index dimension, double std, std::uint64_t seed);

}  // namespace arff
