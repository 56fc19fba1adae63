#include "arff/app/io.hpp"

#include "arff/errors.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <unistd.h>

namespace arff::io {

using nlohmann::json;

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw std::runtime_error("not a number: '" + std::string(text) + "'");
  return value;
}

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw std::runtime_error("missing CSV column '" + std::string(name) + "'");
}

bool CsvTable::has_column(std::string_view name) const {
  for (const auto& h : header)
    if (h == name) return true;
  return false;
}

double CsvTable::number(std::size_t row, std::string_view name) const { return parse_double(text(row, name)); }

const std::string& CsvTable::text(std::size_t row, std::string_view name) const {
  return rows.at(row).at(column(name));
}

void CsvTable::add_row(std::vector<std::string> fields) {
  if (fields.size() != header.size())
    throw std::logic_error("CSV row has " + std::to_string(fields.size()) + " fields, header has " +
                           std::to_string(header.size()));
  rows.push_back(std::move(fields));
}

std::string CsvTable::str() const {
  std::string out;
  auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += fields[i];
    }
    out += '\n';
  };
  line(header);
  for (const auto& r : rows) line(r);
  return out;
}

CsvTable parse_csv(std::string_view text) {
  CsvTable table;
  bool first = true;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t comma = line.find(',', start);
      fields.emplace_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (first) {
      table.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != table.header.size())
        throw std::runtime_error("CSV line " + std::to_string(line_no) + " has " + std::to_string(fields.size()) +
                                 " fields, expected " + std::to_string(table.header.size()));
      table.rows.push_back(std::move(fields));
    }
  }
  if (first) throw std::runtime_error("CSV input has no header");
  return table;
}

CsvTable read_csv(const std::filesystem::path& path) { return parse_csv(read_file(path)); }

CsvTable trace_table(const std::vector<IterationRecord>& records) {
  CsvTable t;
  t.header = {"iter", "train_err", "test_err", "ess", "resampled", "accepts", "solves", "train_mse", "test_mse"};
  for (const auto& r : records) {
    t.add_row({std::to_string(r.iteration), format_double(r.train_error), format_double(r.test_error),
               format_double(r.ess), r.resampled ? "1" : "0", std::to_string(r.accepted), std::to_string(r.solves),
               format_double(r.train_mse), format_double(r.test_mse)});
  }
  return t;
}

std::vector<IterationRecord> parse_trace(const CsvTable& table) {
  std::vector<IterationRecord> out;
  out.reserve(table.rows.size());
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    IterationRecord r;
    r.iteration = static_cast<Index>(table.number(i, "iter"));
    r.train_error = table.number(i, "train_err");
    r.test_error = table.number(i, "test_err");
    r.ess = table.number(i, "ess");
    r.resampled = table.text(i, "resampled") == "1";
    r.accepted = static_cast<Index>(table.number(i, "accepts"));
    r.solves = static_cast<Index>(table.number(i, "solves"));
    r.train_mse = table.number(i, "train_mse");
    r.test_mse = table.number(i, "test_mse");
    out.push_back(r);
  }
  return out;
}

namespace {

void fnv1a(std::uint64_t& h, const void* data, std::size_t bytes) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
}

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

json matrix_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Eigen::MatrixXd matrix_from_json(const json& j, Index expected_cols = -1) {
  if (!j.is_array()) throw ConfigError("expected a matrix (array of rows)");
  const auto rows = static_cast<Index>(j.size());
  const Index cols = rows > 0 ? static_cast<Index>(j.at(0).size()) : std::max<Index>(expected_cols, 0);
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const json& row = j.at(static_cast<std::size_t>(i));
    if (static_cast<Index>(row.size()) != cols) throw ConfigError("ragged matrix in model file");
    for (Index c = 0; c < cols; ++c) m(i, c) = row.at(static_cast<std::size_t>(c)).get<double>();
  }
  return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw ConfigError("expected a vector");
  Eigen::VectorXd v(static_cast<Index>(j.size()));
  for (Index i = 0; i < v.size(); ++i) v(i) = j.at(static_cast<std::size_t>(i)).get<double>();
  return v;
}

void check_header(const json& j) {
  if (!j.is_object() || j.value("format", "") != "arff-model") throw ConfigError("not an arff-model file");
  const int version = j.value("version", 0);
  if (version != kSchemaVersion)
    throw ConfigError("unsupported model file version " + std::to_string(version));
}

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <typename T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  if (!in) throw std::runtime_error("truncated dataset file");
  return v;
}

constexpr char kDatasetMagic[8] = {'A', 'R', 'F', 'F', 'D', 'S', '0', '1'};

}  // namespace

std::string state_digest(const FrequencySet& freqs, const AmplitudeVector& amplitudes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  fnv1a(h, freqs.vectors().data(), static_cast<std::size_t>(freqs.vectors().size()) * sizeof(double));
  fnv1a(h, amplitudes.values().data(),
        static_cast<std::size_t>(amplitudes.values().size()) * sizeof(std::complex<double>));
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json trace_summary(const TrainTrace& trace) {
  json j;
  j["schema"] = "arff-trace-summary";
  j["version"] = kSchemaVersion;
  j["iterations"] = trace.records.size();
  j["nodes"] = trace.frequencies.count();
  j["fallback_solves"] = trace.fallback_solves;
  auto add_min = [&](const char* name, auto getter) {
    double best = std::numeric_limits<double>::quiet_NaN();
    Index arg = -1;
    for (const auto& r : trace.records) {
      const double v = getter(r);
      if (!std::isnan(v) && (arg < 0 || v < best)) {
        best = v;
        arg = r.iteration;
      }
    }
    j[std::string("min_") + name] = number_or_null(best);
    j[std::string("argmin_") + name] = arg >= 0 ? json(arg) : json(nullptr);
    j[std::string("final_") + name] = trace.records.empty() ? json(nullptr) : number_or_null(getter(trace.records.back()));
  };
  add_min("train_err", [](const IterationRecord& r) { return r.train_error; });
  add_min("test_err", [](const IterationRecord& r) { return r.test_error; });
  add_min("train_mse", [](const IterationRecord& r) { return r.train_mse; });
  add_min("test_mse", [](const IterationRecord& r) { return r.test_mse; });
  j["digest"] = state_digest(trace.frequencies, trace.amplitudes);
  return j;
}

json stats_to_json(const NormalizationStats& stats) {
  return {{"input_mean", vector_to_json(stats.input_mean)},
          {"input_std", vector_to_json(stats.input_std)},
          {"output_mean", vector_to_json(stats.output_mean)},
          {"output_std", vector_to_json(stats.output_std)}};
}

NormalizationStats stats_from_json(const json& j) {
  NormalizationStats s;
  s.input_mean = vector_from_json(j.at("input_mean"));
  s.input_std = vector_from_json(j.at("input_std"));
  s.output_mean = vector_from_json(j.at("output_mean"));
  s.output_std = vector_from_json(j.at("output_std"));
  if (s.input_mean.size() != s.input_std.size() || s.output_mean.size() != s.output_std.size())
    throw ConfigError("inconsistent normalization stats");
  return s;
}

json model_to_json(const ShallowModel& model) {
  json j;
  j["format"] = "arff-model";
  j["version"] = kSchemaVersion;
  j["kind"] = "shallow";
  j["activation"] = std::string(to_string(model.activation));
  j["norm"] = std::string(to_string(model.amplitudes.norm_kind()));
  j["nodes"] = model.frequencies.count();
  j["dimension"] = model.frequencies.dimension();
  j["channels"] = model.amplitudes.channels();
  j["frequencies"] = matrix_to_json(model.frequencies.vectors());
  j["amplitudes_real"] = matrix_to_json(model.amplitudes.values().real());
  j["amplitudes_imag"] = matrix_to_json(model.amplitudes.values().imag());
  if (model.stats) j["normalization"] = stats_to_json(*model.stats);
  return j;
}

json model_to_json(const MlpModel& model) {
  json j;
  j["format"] = "arff-model";
  j["version"] = kSchemaVersion;
  j["kind"] = "mlp";
  json layers = json::array();
  for (const DenseLayer& l : model.layers()) {
    layers.push_back({{"activation", std::string(to_string(l.activation))},
                      {"weights", matrix_to_json(l.weights)},
                      {"bias", vector_to_json(l.bias)},
                      {"bias_fixed_zero", l.bias_fixed_zero},
                      {"trainable", l.trainable}});
  }
  j["layers"] = std::move(layers);
  return j;
}

std::string model_kind(const json& j) {
  check_header(j);
  return j.at("kind").get<std::string>();
}

ShallowModel shallow_model_from_json(const json& j) {
  if (model_kind(j) != "shallow") throw ConfigError("model file does not hold a shallow network");
  ShallowModel m;
  m.activation = parse_activation(j.at("activation").get<std::string>());
  const NormKind norm = parse_norm_kind(j.at("norm").get<std::string>());
  const Index dim = j.at("dimension").get<Index>();
  const Index channels = j.at("channels").get<Index>();
  m.frequencies = FrequencySet(matrix_from_json(j.at("frequencies"), dim));
  const Eigen::MatrixXd re = matrix_from_json(j.at("amplitudes_real"), channels);
  const Eigen::MatrixXd im = matrix_from_json(j.at("amplitudes_imag"), channels);
  if (re.rows() != im.rows() || re.cols() != im.cols() || re.rows() != m.frequencies.count())
    throw ConfigError("amplitude shape does not match frequencies");
  Eigen::MatrixXcd values(re.rows(), re.cols());
  values.real() = re;
  values.imag() = im;
  m.amplitudes = AmplitudeVector(std::move(values), norm);
  if (j.contains("normalization")) m.stats = stats_from_json(j.at("normalization"));
  return m;
}

MlpModel mlp_model_from_json(const json& j) {
  if (model_kind(j) != "mlp") throw ConfigError("model file does not hold an MLP");
  std::vector<DenseLayer> layers;
  for (const json& lj : j.at("layers")) {
    DenseLayer l;
    l.activation = parse_layer_activation(lj.at("activation").get<std::string>());
    l.weights = matrix_from_json(lj.at("weights"));
    l.bias = vector_from_json(lj.at("bias"));
    l.bias_fixed_zero = lj.at("bias_fixed_zero").get<bool>();
    l.trainable = lj.at("trainable").get<bool>();
    layers.push_back(std::move(l));
  }
  return MlpModel(std::move(layers));
}

std::filesystem::path sidecar_path(const std::filesystem::path& path) {
  std::filesystem::path p = path;
  p += ".json";
  return p;
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
  static_assert(std::endian::native == std::endian::little, "dataset files are little-endian");
  data.validate();
  std::ostringstream out(std::ios::binary);
  out.write(kDatasetMagic, sizeof kDatasetMagic);
  write_pod(out, static_cast<std::uint64_t>(data.size()));
  write_pod(out, static_cast<std::uint64_t>(data.input_dimension()));
  write_pod(out, static_cast<std::uint64_t>(data.output_channels()));
  out.write(reinterpret_cast<const char*>(data.inputs.data()),
            static_cast<std::streamsize>(data.inputs.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(data.outputs.data()),
            static_cast<std::streamsize>(data.outputs.size() * sizeof(double)));
  write_file_atomic(path, out.str());

  json side;
  side["format"] = "arff-dataset";
  side["version"] = kSchemaVersion;
  side["provenance"] = std::string(to_string(data.provenance));
  side["rows"] = data.size();
  side["input_dimension"] = data.input_dimension();
  side["output_channels"] = data.output_channels();
  side["normalization"] = stats_to_json(data.stats);
  write_file_atomic(sidecar_path(path), side.dump(2) + "\n");
}

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open dataset " + path.string());
  char magic[sizeof kDatasetMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kDatasetMagic, sizeof magic) != 0)
    throw std::runtime_error(path.string() + " is not an ARFFDS01 dataset");
  const auto rows = static_cast<Index>(read_pod<std::uint64_t>(in));
  const auto dim = static_cast<Index>(read_pod<std::uint64_t>(in));
  const auto channels = static_cast<Index>(read_pod<std::uint64_t>(in));
  Dataset data;
  data.inputs.resize(rows, dim);
  data.outputs.resize(rows, channels);
  in.read(reinterpret_cast<char*>(data.inputs.data()), static_cast<std::streamsize>(data.inputs.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(data.outputs.data()),
          static_cast<std::streamsize>(data.outputs.size() * sizeof(double)));
  if (!in) throw std::runtime_error("truncated dataset file " + path.string());

  const std::filesystem::path side = sidecar_path(path);
  if (std::filesystem::exists(side)) {
    const json j = json::parse(read_file(side));
    data.provenance = parse_provenance(j.at("provenance").get<std::string>());
    data.stats = stats_from_json(j.at("normalization"));
  } else {
    data.stats = Dataset::identity_stats(dim, channels);
  }
  data.validate();
  return data;
}

CsvTable dataset_table(const Dataset& data) {
  data.validate();
  CsvTable t;
  for (Index i = 0; i < data.input_dimension(); ++i) t.header.push_back("x" + std::to_string(i + 1));
  if (data.output_channels() == 1) {
    t.header.push_back("y");
  } else {
    for (Index c = 0; c < data.output_channels(); ++c) t.header.push_back("y" + std::to_string(c + 1));
  }
  for (Index m = 0; m < data.size(); ++m) {
    std::vector<std::string> row;
    row.reserve(t.header.size());
    for (Index i = 0; i < data.input_dimension(); ++i) row.push_back(format_double(data.inputs(m, i)));
    for (Index c = 0; c < data.output_channels(); ++c) row.push_back(format_double(data.outputs(m, c)));
    t.add_row(std::move(row));
  }
  return t;
}

Dataset dataset_from_table(const CsvTable& table, Provenance provenance) {
  Index d = 0;
  while (table.has_column("x" + std::to_string(d + 1))) ++d;
  std::vector<std::size_t> ycols;
  if (table.has_column("y")) {
    ycols.push_back(table.column("y"));
  } else {
    for (Index c = 1; table.has_column("y" + std::to_string(c)); ++c) ycols.push_back(table.column("y" + std::to_string(c)));
  }
  if (d == 0 || ycols.empty()) throw ConfigError("dataset CSV needs columns x1.. and y (or y1..)");
  Dataset data;
  data.provenance = provenance;
  const auto m = static_cast<Index>(table.rows.size());
  data.inputs.resize(m, d);
  data.outputs.resize(m, static_cast<Index>(ycols.size()));
  for (Index r = 0; r < m; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    for (Index i = 0; i < d; ++i) data.inputs(r, i) = parse_double(row[table.column("x" + std::to_string(i + 1))]);
    for (std::size_t c = 0; c < ycols.size(); ++c)
      data.outputs(r, static_cast<Index>(c)) = parse_double(row[ycols[c]]);
  }
  data.stats = Dataset::identity_stats(d, data.output_channels());
  data.validate();
  return data;
}

CsvTable loss_curve_table(const std::vector<EpochRecord>& curve) {
  CsvTable t;
  t.header = {"epoch", "train_mse", "val_mse"};
  for (const auto& e : curve)
    t.add_row({std::to_string(e.epoch), format_double(e.train_mse), format_double(e.val_mse)});
  return t;
}

std::vector<EpochRecord> parse_loss_curve(const CsvTable& table) {
  std::vector<EpochRecord> out;
  for (std::size_t i = 0; i < table.rows.size(); ++i) {
    EpochRecord e;
    e.epoch = static_cast<Index>(table.number(i, "epoch"));
    e.train_mse = table.number(i, "train_mse");
    e.val_mse = table.number(i, "val_mse");
    out.push_back(e);
  }
  return out;
}

}  // namespace arff::io
