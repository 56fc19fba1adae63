#include "arff/app/experiment.hpp"

#include "arff/app/kde.hpp"
#include "arff/errors.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#ifndef ARFF_VERSION
#define ARFF_VERSION "unknown"
#endif

namespace arff {

using nlohmann::json;

std::string_view to_string(ExperimentKind kind) noexcept {
  switch (kind) {
    case ExperimentKind::kStats:
      return "test1_stats";
    case ExperimentKind::kFullData:
      return "test2_fulldata";
    case ExperimentKind::kGamma:
      return "test3_gamma";
    case ExperimentKind::kBatch:
      return "test4_batch";
    case ExperimentKind::kInit:
      return "test5_init";
    case ExperimentKind::kPretrain:
      return "test6_pretrain";
    case ExperimentKind::kImage:
      return "image_pipeline";
  }
  return "test2_fulldata";
}

ExperimentKind parse_experiment_kind(std::string_view text) {
  for (auto k : {ExperimentKind::kStats, ExperimentKind::kFullData, ExperimentKind::kGamma, ExperimentKind::kBatch,
                 ExperimentKind::kInit, ExperimentKind::kPretrain, ExperimentKind::kImage})
    if (text == to_string(k)) return k;
  throw ConfigError("unknown experiment kind '" + std::string(text) + "'");
}

Index parse_batch_size(std::string_view text) {
  if (text == "M" || text == "full") return kFullBatch;
  if (text == "K^1.5" || text == "k^1.5") return kPowerBatch;
  try {
    std::size_t used = 0;
    const long long v = std::stoll(std::string(text), &used);
    if (used != text.size() || v < 1) throw ConfigError("");
    return static_cast<Index>(v);
  } catch (const std::exception&) {
    throw ConfigError("batch size must be a positive integer, 'full' or 'K^1.5', got '" + std::string(text) + "'");
  }
}

std::string batch_size_label(Index batch) {
  if (batch == kFullBatch) return "full";
  if (batch == kPowerBatch) return "K^1.5";
  return std::to_string(batch);
}

Index resolve_batch_size(Index batch, Index nodes, Index data_size) {
  if (batch == kFullBatch) return data_size;
  if (batch == kPowerBatch) return static_cast<Index>(std::ceil(std::pow(static_cast<double>(nodes), 1.5)));
  return batch;
}

namespace {

double default_delta(Index nodes) { return std::pow(2.0, -0.5 - 0.25 * std::log2(static_cast<double>(nodes) / 16.0)); }

std::vector<double> default_deltas(const std::vector<Index>& nodes) {
  std::vector<double> d;
  for (Index k : nodes) d.push_back(default_delta(k));
  return d;
}

}  // namespace

double ExperimentConfig::delta_for(std::size_t node_index) const {
  if (deltas.empty()) return default_delta(nodes.at(node_index));
  return deltas.size() == 1 ? deltas.front() : deltas.at(node_index);
}

TargetSpec ExperimentConfig::target() const {
  return identity_rotation ? TargetSpec::identity(4, alpha) : TargetSpec::published_rotation(alpha);
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (kind == ExperimentKind::kImage) {
    if (realizations < 1) fail("realizations must be >= 1");
    if (image.approaches.empty()) fail("approaches must be nonempty");
    if (image.crop < 2) fail("crop must be >= 2");
    if (image.nodes < 1 || image.relu_layers < 1) fail("nodes and relu_layers must be >= 1");
    if (image.epochs < 0 || image.batch_size < 1) fail("epochs must be >= 0 and batch size >= 1");
    return;
  }
  if (nodes.empty()) fail("nodes must be nonempty");
  if (gammas.empty()) fail("gammas must be nonempty");
  if (batch_sizes.empty()) fail("batch_sizes must be nonempty");
  if (init_stds.empty()) fail("init_stds must be nonempty");
  if (variants.empty() && kind != ExperimentKind::kPretrain) fail("variants must be nonempty");
  if (realizations < 1) fail("realizations must be >= 1");
  if (iterations < 1) fail("iterations must be >= 1");
  if (!(lambda > 0.0)) fail("lambda must be > 0");
  if (test_size < 0) fail("test_size must be >= 0");
  if (data_size < 0) fail("data_size must be >= 0");
  if (!(alpha > 0.0)) fail("alpha must be > 0");
  if (threads < 1) fail("threads must be >= 1");
  if (!deltas.empty() && deltas.size() != 1 && deltas.size() != nodes.size())
    fail("deltas must have one entry or one per node count (" + std::to_string(nodes.size()) + ")");
  if (batch_paired && batch_sizes.size() != nodes.size())
    fail("paired batch_sizes must have one entry per node count (" + std::to_string(nodes.size()) + ")");
  for (double d : deltas)
    if (!(d >= 0.0)) fail("deltas must be >= 0");
  for (double g : gammas)
    if (!(g >= 1.0)) fail("gammas must be >= 1");
  for (double s : init_stds)
    if (!(s >= 0.0)) fail("init_stds must be >= 0");
  for (Index b : batch_sizes)
    if (b < kPowerBatch) fail("invalid batch size");
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const Index k = nodes[i];
    if (k < 1) fail("nodes must be >= 1");
    const Index m = data_size > 0 ? data_size : k * k;
    for (std::size_t b = 0; b < batch_sizes.size(); ++b) {
      if (batch_paired && b != i) continue;
      const Index mb = resolve_batch_size(batch_sizes[b], k, m);
      if (mb <= k || mb > m)
        fail("batch size " + std::to_string(mb) + " for K=" + std::to_string(k) + " must satisfy K < M_B <= M=" +
             std::to_string(m));
    }
  }
  for (Index s : snapshot_iterations)
    if (s < 0 || s > iterations) fail("snapshot iterations must lie in [0, iterations]");
  for (Index a : kde_axes)
    if (a < 0 || a > 3) fail("kde axes must lie in [0, 3]");
  if (kind == ExperimentKind::kPretrain) {
    if (pretrain_iterations < 1 || adam_epochs < 0 || adam_batch_size < 1 || !(adam_learning_rate >= 0.0))
      fail("invalid pretraining parameters");
    if (test_size < 1) fail("pretraining comparison needs validation data (test_size >= 1)");
  }
}

ExperimentConfig default_experiment(ExperimentKind kind, bool paper_scale) {
  ExperimentConfig c;
  c.kind = kind;
  c.iterations = paper_scale ? 10000 : 2000;
  switch (kind) {
    case ExperimentKind::kStats:
      c.nodes = paper_scale ? std::vector<Index>{32, 64, 128, 256, 512} : std::vector<Index>{32, 64, 128};
      c.batch_sizes = {kPowerBatch};
      c.realizations = paper_scale ? 100 : 10;
      break;
    case ExperimentKind::kFullData:
      c.nodes = paper_scale ? std::vector<Index>{32, 64, 128, 256, 512, 1024} : std::vector<Index>{32, 64, 128};
      break;
    case ExperimentKind::kGamma:
      c.nodes = {paper_scale ? Index{256} : Index{64}};
      c.gammas = {1.0, 10.0};
      break;
    case ExperimentKind::kBatch:
      c.nodes = {paper_scale ? Index{512} : Index{64}};
      c.batch_sizes = paper_scale ? std::vector<Index>{1000, 10000, kFullBatch} : std::vector<Index>{256, 1024, kFullBatch};
      break;
    case ExperimentKind::kInit:
      c.nodes = paper_scale ? std::vector<Index>{32, 64, 128, 256, 512, 1024} : std::vector<Index>{32, 64, 128};
      c.batch_sizes = paper_scale ? std::vector<Index>{kFullBatch, kFullBatch, 10000, 10000, 10000, 10000}
                                  : std::vector<Index>{kFullBatch, kFullBatch, 10000};
      c.batch_paired = true;
      c.init_stds = {10.0};
      c.snapshot_iterations = {0, 10, 100, 1000, c.iterations};
      break;
    case ExperimentKind::kPretrain:
      c.identity_rotation = true;
      c.nodes = {paper_scale ? Index{1024} : Index{128}};
      c.deltas = {0.25};
      c.data_size = paper_scale ? 1000000 : 10000;
      c.test_size = paper_scale ? 10000 : 1000;
      c.batch_sizes = {paper_scale ? Index{10000} : Index{2000}};
      c.iterations = paper_scale ? 12000 : 2000;
      c.pretrain_iterations = 300;
      c.adam_epochs = 400;
      c.adam_batch_size = 128;
      c.adam_learning_rate = 5e-4;
      c.variants = {};
      break;
    case ExperimentKind::kImage:
      if (paper_scale) {
        c.image.crop = 512;
        c.image.synthetic_size = 512;
        c.image.epochs = 2000;
      }
      break;
  }
  if (kind != ExperimentKind::kPretrain && kind != ExperimentKind::kImage) c.deltas = default_deltas(c.nodes);
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["kind"] = std::string(to_string(c.kind));
  j["seed"] = c.seed;
  j["output"] = c.output.string();
  j["threads"] = c.threads;
  j["realizations"] = c.realizations;
  if (c.kind == ExperimentKind::kImage) {
    const auto& im = c.image;
    json paths = json::array();
    for (const auto& p : im.images) paths.push_back(p.string());
    json approaches = json::array();
    for (auto a : im.approaches) approaches.push_back(static_cast<int>(a));
    j["image"] = {{"images", paths},
                  {"synthetic_size", im.synthetic_size},
                  {"crop", im.crop},
                  {"approaches", approaches},
                  {"nodes", im.nodes},
                  {"arff_iterations", im.arff_iterations},
                  {"arff_lambda", im.arff_lambda},
                  {"arff_delta", im.arff_delta},
                  {"relu_layers", im.relu_layers},
                  {"epochs", im.epochs},
                  {"batch_size", im.batch_size},
                  {"learning_rate", im.learning_rate},
                  {"freeze_rff_layer", im.freeze_rff_layer}};
    return j;
  }
  j["target"] = {{"rotation", c.identity_rotation ? "identity" : "published"}, {"alpha", c.alpha}};
  j["nodes"] = c.nodes;
  std::vector<double> deltas;
  for (std::size_t i = 0; i < c.nodes.size(); ++i) deltas.push_back(c.delta_for(i));
  j["deltas"] = deltas;
  j["gammas"] = c.gammas;
  std::vector<std::string> batches;
  for (Index b : c.batch_sizes) batches.push_back(batch_size_label(b));
  j["batch_sizes"] = batches;
  j["batch_paired"] = c.batch_paired;
  j["init_stds"] = c.init_stds;
  std::vector<std::string> variants;
  for (Variant v : c.variants) variants.emplace_back(to_string(v));
  j["variants"] = variants;
  j["iterations"] = c.iterations;
  j["lambda"] = c.lambda;
  j["data_size"] = c.data_size == 0 ? json("K^2") : json(c.data_size);
  j["test_size"] = c.test_size;
  j["snapshot_iterations"] = c.snapshot_iterations;
  j["kde_axes"] = c.kde_axes;
  if (c.kind == ExperimentKind::kPretrain) {
    j["pretrain_iterations"] = c.pretrain_iterations;
    j["adam_epochs"] = c.adam_epochs;
    j["adam_batch_size"] = c.adam_batch_size;
    j["adam_learning_rate"] = c.adam_learning_rate;
    j["freeze_first_layer"] = c.freeze_first_layer;
  }
  return j;
}

SampleStats sample_stats(const std::vector<double>& values) {
  if (values.empty()) throw PreconditionError("statistics of an empty sample");
  SampleStats s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  s.lo = s.mean - 2.0 * s.std;
  s.hi = s.mean + 2.0 * s.std;
  return s;
}

std::uint64_t realization_seed(std::uint64_t master, Index nodes, Index realization) {
  return CounterRng(master).split(static_cast<std::uint64_t>(nodes)).at(static_cast<std::uint64_t>(realization));
}

std::pair<Dataset, Dataset> realization_data(const TargetSpec& spec, Index data_size, Index test_size,
                                             std::uint64_t seed) {
  const CounterRng root(seed);
  auto [train, stats] = normalize(generate_dataset(data_size, spec, stream(root, StreamPurpose::kData)));
  Dataset test;
  if (test_size > 0)
    test = apply_normalization(generate_dataset(test_size, spec, stream(root, StreamPurpose::kTestData)), stats);
  return {std::move(train), std::move(test)};
}

FrequencySet initial_frequencies(Index nodes, Index dimension, double std, std::uint64_t seed) {
  FrequencySet f = FrequencySet::zeros(nodes, dimension);
  if (std > 0.0) {
    CounterRng rng = stream(CounterRng(seed), StreamPurpose::kInitialFrequencies);
    fill_standard_normal(rng, std::span<double>(f.vectors().data(), static_cast<std::size_t>(f.vectors().size())));
    f.vectors() *= std;
  }
  return f;
}

namespace {

const char* const kMetrics[] = {"train_err", "test_err", "train_mse", "test_mse", "ess"};

double metric_of(const IterationRecord& r, std::string_view name) {
  if (name == "train_err") return r.train_error;
  if (name == "test_err") return r.test_error;
  if (name == "train_mse") return r.train_mse;
  if (name == "test_mse") return r.test_mse;
  return r.ess;
}

// Minimum over iterations ignoring NaN (NaN when all are NaN).
double min_metric(const std::vector<IterationRecord>& records, std::string_view name) {
  double best = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : records) {
    const double v = metric_of(r, name);
    if (!std::isnan(v) && (std::isnan(best) || v < best)) best = v;
  }
  return best;
}

std::string fmt(double v) { return io::format_double(v); }

std::string group_label(Index k, double gamma, Index batch, double init_std) {
  return "K" + std::to_string(k) + "_g" + fmt(gamma) + "_b" + std::to_string(batch) + "_s" + fmt(init_std);
}

struct Group {
  std::string label;
  std::size_t node_index;
  Index nodes;
  double delta;
  double gamma;
  Index batch;
  double init_std;
  Index data_size;
};

struct Job {
  std::size_t group;
  Variant variant;
  Index realization;
  std::string path;
};

struct JobResult {
  std::vector<IterationRecord> records;
  std::vector<double> wall;
};

// Runs `count` independent tasks on `threads` workers; rethrows the first failure.
template <typename Task>
void parallel_for(std::size_t count, unsigned threads, Task task) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        task(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = count;
        return;
      }
    }
  };
  const unsigned n = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(count)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < n; ++t) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void write(const std::string& relative, std::string_view content) {
    io::write_file_atomic(dir_ / relative, content);
    std::lock_guard lock(mutex_);
    files_.push_back(relative);
  }
  std::vector<std::string> files() const {
    std::vector<std::string> f = files_;
    std::sort(f.begin(), f.end());
    return f;
  }
  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path dir_;
  std::mutex mutex_;
  std::vector<std::string> files_;
};

io::CsvTable aggregate_table(const std::vector<const std::vector<IterationRecord>*>& runs) {
  io::CsvTable t;
  t.header = {"iter", "runs"};
  for (const char* m : kMetrics)
    for (const char* s : {"_mean", "_std", "_lo", "_hi"}) t.header.push_back(std::string(m) + s);
  const std::size_t n = runs.front()->size();
  for (std::size_t it = 0; it < n; ++it) {
    std::vector<std::string> row{std::to_string((*runs.front())[it].iteration), std::to_string(runs.size())};
    for (const char* m : kMetrics) {
      std::vector<double> values;
      for (const auto* r : runs) values.push_back(metric_of((*r)[it], m));
      const SampleStats s = sample_stats(values);
      for (double v : {s.mean, s.std, s.lo, s.hi}) row.push_back(fmt(v));
    }
    t.add_row(std::move(row));
  }
  return t;
}

void write_kde_snapshot(ArtifactWriter& out, const std::string& stem, const Eigen::MatrixXd& projected,
                        Index axis, double alpha, double si_l1, const SiFactorTransform& transform) {
  const Eigen::VectorXd samples = projected.col(axis);
  const KdeEstimate est = kde(samples);
  io::CsvTable t;
  t.header = {"grid", "density", "p_star"};
  for (Index g = 0; g < est.grid.size(); ++g)
    t.add_row({fmt(est.grid(g)), fmt(est.density(g)),
               fmt(optimal_marginal_density(est.grid(g), axis, alpha, si_l1, &transform))});
  out.write(stem + "_axis" + std::to_string(axis + 1) + ".csv", t.str());
}

ExperimentOutcome finish(ArtifactWriter& out, const ExperimentConfig& config, json extra, const json& timing) {
  out.write("timing.json", timing.dump(2) + "\n");
  json manifest;
  manifest["format"] = "arff-manifest";
  manifest["version"] = io::kSchemaVersion;
  manifest["code_version"] = ARFF_VERSION;
  manifest["config"] = to_json(config);
  manifest["schemas"] = {{"trace", io::kSchemaVersion}, {"aggregate", io::kSchemaVersion},
                         {"convergence", io::kSchemaVersion}, {"loss_curve", io::kSchemaVersion},
                         {"psnr", io::kSchemaVersion}, {"kde", io::kSchemaVersion}};
  for (auto& [key, value] : extra.items()) manifest[key] = value;
  std::vector<std::string> files = out.files();
  files.push_back("manifest.json");
  std::sort(files.begin(), files.end());
  manifest["files"] = files;
  io::write_file_atomic(out.dir() / "manifest.json", manifest.dump(2) + "\n");
  return {out.dir(), files};
}

ExperimentOutcome run_sweep(const ExperimentConfig& config) {
  const TargetSpec spec = config.target();
  const double l1 = fourier_l1_norm(spec).l1_norm;
  const bool want_kde = !config.snapshot_iterations.empty();
  std::optional<SiFactorTransform> transform;
  double si_l1 = 0.0;
  if (want_kde) {
    transform.emplace(config.alpha);
    si_l1 = fourier_l1_norm(TargetSpec::identity(1, config.alpha)).one_dimensional;
  }

  std::vector<Group> groups;
  for (std::size_t i = 0; i < config.nodes.size(); ++i) {
    const Index k = config.nodes[i];
    const Index m = config.data_size > 0 ? config.data_size : k * k;
    for (double gamma : config.gammas) {
      for (std::size_t b = 0; b < config.batch_sizes.size(); ++b) {
        if (config.batch_paired && b != i) continue;
        const Index mb = resolve_batch_size(config.batch_sizes[b], k, m);
        for (double s : config.init_stds)
          groups.push_back({group_label(k, gamma, mb, s), i, k, config.delta_for(i), gamma, mb, s, m});
      }
    }
  }

  std::vector<Job> jobs;
  for (std::size_t g = 0; g < groups.size(); ++g)
    for (Variant v : config.variants)
      for (Index r = 0; r < config.realizations; ++r) {
        char name[32];
        std::snprintf(name, sizeof name, "r%04lld.csv", static_cast<long long>(r));
        jobs.push_back({g, v, r, "runs/" + groups[g].label + "/" + std::string(to_string(v)) + "/" + name});
      }

  ArtifactWriter out(config.output);
  std::vector<JobResult> results(jobs.size());
  parallel_for(jobs.size(), config.threads, [&](std::size_t j) {
    const Job& job = jobs[j];
    const Group& g = groups[job.group];
    const std::uint64_t seed = realization_seed(config.seed, g.nodes, job.realization);
    const auto [train_data, test_data] = realization_data(spec, g.data_size, config.test_size, seed);

    ArffConfig arff;
    arff.iterations = config.iterations;
    arff.step_stddev = g.delta;
    arff.gamma = g.gamma;
    arff.batch_size = g.batch;
    arff.lambda = config.lambda;
    arff.seed = seed;
    apply_variant(arff, job.variant);

    IterationObserver observer;
    const std::string stem = "kde/" + g.label + "/" + std::string(to_string(job.variant)) + "/r" +
                             std::to_string(job.realization) + "_it";
    if (want_kde && job.realization == 0) {
      observer = [&](Index it, const FrequencySet& freqs, const AmplitudeVector&) {
        if (std::find(config.snapshot_iterations.begin(), config.snapshot_iterations.end(), it) ==
            config.snapshot_iterations.end())
          return;
        const Eigen::MatrixXd projected = freqs.vectors() * spec.rotation();  // rows B^T w
        for (Index axis : config.kde_axes)
          write_kde_snapshot(out, stem + std::to_string(it), projected, axis, config.alpha, si_l1, *transform);
      };
    }
    const TrainTrace trace = train(arff, train_data, initial_frequencies(g.nodes, 4, g.init_std, seed),
                                   config.test_size > 0 ? &test_data : nullptr, observer);
    out.write(job.path, io::trace_table(trace.records).str());
    std::string summary = job.path.substr(0, job.path.size() - 4) + ".json";
    out.write(summary, io::trace_summary(trace).dump(2) + "\n");
    results[j].records = trace.records;
    for (const auto& r : trace.records) results[j].wall.push_back(r.wall_seconds);
  });

  json runs_index = json::array();
  json aggregates_index = json::array();
  io::CsvTable convergence;
  convergence.header = {"group", "K", "delta", "gamma", "batch", "init_std", "variant", "runs"};
  for (const char* m : {"min_train_err", "min_test_err", "min_train_mse", "min_test_mse"})
    for (const char* s : {"_mean", "_std", "_lo", "_hi"}) convergence.header.push_back(std::string(m) + s);
  convergence.header.push_back("bound");
  convergence.header.push_back("bound_lambda0");

  json timing = json::object();
  for (std::size_t g = 0; g < groups.size(); ++g) {
    for (Variant v : config.variants) {
      std::vector<const std::vector<IterationRecord>*> runs;
      json run_paths = json::array();
      for (std::size_t j = 0; j < jobs.size(); ++j) {
        if (jobs[j].group != g || jobs[j].variant != v) continue;
        runs.push_back(&results[j].records);
        run_paths.push_back(jobs[j].path);
        runs_index.push_back({{"group", groups[g].label}, {"variant", std::string(to_string(v))},
                              {"realization", jobs[j].realization}, {"path", jobs[j].path}});
        timing[jobs[j].path] = results[j].wall;
      }
      const std::string agg_path = "aggregate/" + groups[g].label + "_" + std::string(to_string(v)) + ".csv";
      out.write(agg_path, aggregate_table(runs).str());
      aggregates_index.push_back({{"group", groups[g].label}, {"variant", std::string(to_string(v))},
                                  {"path", agg_path}, {"runs", run_paths}});

      const Group& gr = groups[g];
      std::vector<std::string> row{gr.label,         std::to_string(gr.nodes), fmt(gr.delta),
                                   fmt(gr.gamma),    std::to_string(gr.batch), fmt(gr.init_std),
                                   std::string(to_string(v)), std::to_string(runs.size())};
      for (const char* m : {"train_err", "test_err", "train_mse", "test_mse"}) {
        std::vector<double> mins;
        for (const auto* r : runs) mins.push_back(min_metric(*r, m));
        const SampleStats s = sample_stats(mins);
        for (double x : {s.mean, s.std, s.lo, s.hi}) row.push_back(fmt(x));
      }
      row.push_back(fmt(error_bound_from_norm(l1, spec.dimension(), gr.nodes, config.lambda)));
      row.push_back(fmt(error_bound_from_norm(l1, spec.dimension(), gr.nodes, 0.0)));
      convergence.add_row(std::move(row));
    }
  }
  out.write("aggregate/convergence.csv", convergence.str());
  json extra;
  extra["fourier_l1_norm"] = l1;
  extra["runs"] = runs_index;
  extra["aggregates"] = aggregates_index;
  return finish(out, config, extra, timing);
}

// Two-layer cosine network with Glorot-initialized frequencies, biases and
// output weights; output bias fixed at zero.
MlpModel glorot_cosine_network(Index nodes, Index input_dimension, CounterRng rng) {
  DenseLayer hidden;
  hidden.weights = glorot_normal(nodes, input_dimension, rng);
  hidden.bias = glorot_normal_vector(nodes, rng);
  hidden.activation = LayerActivation::kCosine;
  DenseLayer output;
  output.weights = glorot_normal(1, nodes, rng);
  output.bias = Eigen::VectorXd::Zero(1);
  output.activation = LayerActivation::kIdentity;
  output.bias_fixed_zero = true;
  return MlpModel({std::move(hidden), std::move(output)});
}

ExperimentOutcome run_pretrain(const ExperimentConfig& config) {
  const TargetSpec spec = config.target();
  const Index k = config.nodes.front();
  const Index m = config.data_size > 0 ? config.data_size : k * k;
  const Index mb = resolve_batch_size(config.batch_sizes.front(), k, m);
  const std::uint64_t seed = realization_seed(config.seed, k, 0);
  const auto [train_data, val_data] = realization_data(spec, m, config.test_size, seed);
  const Index d = train_data.input_dimension();

  ArtifactWriter out(config.output);
  io::CsvTable table;
  table.header = {"method", "phase", "step", "val_mse"};
  json timing = json::object();
  json rows_seconds = json::array();

  auto arff_config = [&](double r, bool a, Index iterations) {
    ArffConfig c;
    c.iterations = iterations;
    c.step_stddev = config.delta_for(0);
    c.gamma = config.gammas.front();
    c.batch_size = mb;
    c.lambda = config.lambda;
    c.activation = ActivationKind::kCosineBias;
    c.seed = seed;
    c.resample_rule = ResampleRule::constant(r);
    c.metropolis_rule = MetropolisRule::constant(a);
    return c;
  };
  auto add_arff_rows = [&](const std::string& method, const TrainTrace& trace, double offset) {
    for (const auto& rec : trace.records) {
      table.add_row({method, "arff", std::to_string(rec.iteration), fmt(rec.test_mse)});
      rows_seconds.push_back(offset + rec.wall_seconds);
    }
  };
  auto add_adam_rows = [&](const std::string& method, const AdamTrainResult& res, double offset) {
    for (const auto& e : res.curve) {
      table.add_row({method, "adam", std::to_string(e.epoch), fmt(e.val_mse)});
      rows_seconds.push_back(offset + e.wall_seconds);
    }
  };
  const AdamOptions adam{config.adam_epochs, config.adam_batch_size, config.adam_learning_rate};
  const CounterRng shuffle = stream(CounterRng(seed), StreamPurpose::kShuffle);

  {
    MlpModel model = glorot_cosine_network(k, d, stream(CounterRng(seed), StreamPurpose::kModel));
    const AdamTrainResult res = train_adam(std::move(model), train_data.inputs, train_data.outputs, adam,
                                           shuffle.split(1), &val_data.inputs, &val_data.outputs);
    add_adam_rows("adam", res, 0.0);
    out.write("models/adam.json", io::model_to_json(res.model).dump() + "\n");
  }
  {
    const TrainTrace pre = train(arff_config(1.0, true, config.pretrain_iterations), train_data,
                                 FrequencySet::zeros(k, d + 1), &val_data);
    const std::string method = "arff_r1_a1+adam";
    add_arff_rows(method, pre, 0.0);
    const double offset = pre.records.empty() ? 0.0 : pre.records.back().wall_seconds;
    MlpModel model = cosine_network(pre.frequencies, pre.amplitudes);
    if (config.freeze_first_layer) model.layers().front().trainable = false;
    const AdamTrainResult res = train_adam(std::move(model), train_data.inputs, train_data.outputs, adam,
                                           shuffle.split(2), &val_data.inputs, &val_data.outputs);
    add_adam_rows(method, res, offset);
    out.write("models/arff_r1_a1+adam.json", io::model_to_json(res.model).dump() + "\n");
  }
  const std::pair<double, bool> rules[] = {{1.0, false}, {0.0, true}, {1.0, true}};
  for (const auto& [r, a] : rules) {
    const std::string method = std::string("arff_r") + (r > 0 ? "1" : "0") + "_a" + (a ? "1" : "0");
    const TrainTrace trace = train(arff_config(r, a, config.iterations), train_data, FrequencySet::zeros(k, d + 1),
                                   &val_data);
    add_arff_rows(method, trace, 0.0);
    io::ShallowModel sm{trace.frequencies, trace.amplitudes, ActivationKind::kCosineBias, train_data.stats};
    out.write("models/" + method + ".json", io::model_to_json(sm).dump() + "\n");
  }
  out.write("pretrain.csv", table.str());
  timing["pretrain.csv"] = rows_seconds;
  return finish(out, config, json::object(), timing);
}

ExperimentOutcome run_images(const ExperimentConfig& config) {
  ArtifactWriter out(config.output);
  io::CsvTable runs;
  runs.header = {"image", "approach", "realization", "psnr"};
  std::map<int, std::vector<double>> by_approach;
  json timing = json::object();
  const auto start = std::chrono::steady_clock::now();
  for (Index r = 0; r < config.realizations; ++r) {
    ImagePipelineConfig ic = config.image;
    ic.seed = CounterRng(config.seed).at(static_cast<std::uint64_t>(r));
    const ImagePipelineResult res = image_pipeline(ic);
    for (const ImageRun& run : res.runs) {
      const int a = static_cast<int>(run.approach);
      runs.add_row({run.image, std::to_string(a), std::to_string(r), fmt(run.psnr)});
      by_approach[a].push_back(run.psnr);
      out.write("curves/" + run.image + "_approach" + std::to_string(a) + "_r" + std::to_string(r) + ".csv",
                io::loss_curve_table(run.curve).str());
    }
  }
  timing["total_seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  io::CsvTable summary;
  summary.header = {"approach", "mean", "std", "max", "min", "count"};
  for (ImageApproach a : config.image.approaches) {
    const auto& v = by_approach.at(static_cast<int>(a));
    const SampleStats s = sample_stats(v);
    summary.add_row({std::to_string(static_cast<int>(a)), fmt(s.mean), fmt(s.std),
                     fmt(*std::max_element(v.begin(), v.end())), fmt(*std::min_element(v.begin(), v.end())),
                     std::to_string(v.size())});
  }
  out.write("psnr_runs.csv", runs.str());
  out.write("psnr_summary.csv", summary.str());
  return finish(out, config, json::object(), timing);
}

}  // namespace

ExperimentOutcome run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.output);
  switch (config.kind) {
    case ExperimentKind::kPretrain:
      return run_pretrain(config);
    case ExperimentKind::kImage:
      return run_images(config);
    default:
      return run_sweep(config);
  }
}

double aggregate_discrepancy(const std::filesystem::path& directory) {
  const json manifest = json::parse(io::read_file(directory / "manifest.json"));
  if (!manifest.contains("aggregates")) throw ConfigError("manifest lists no aggregates");
  double worst = 0.0;
  for (const json& agg : manifest.at("aggregates")) {
    std::vector<std::vector<IterationRecord>> runs;
    for (const json& p : agg.at("runs")) runs.push_back(io::parse_trace(io::read_csv(directory / p.get<std::string>())));
    std::vector<const std::vector<IterationRecord>*> ptrs;
    for (const auto& r : runs) ptrs.push_back(&r);
    const io::CsvTable expected = aggregate_table(ptrs);
    const io::CsvTable actual = io::read_csv(directory / agg.at("path").get<std::string>());
    if (actual.header != expected.header || actual.rows.size() != expected.rows.size())
      throw std::runtime_error("aggregate " + agg.at("path").get<std::string>() + " has an unexpected shape");
    for (std::size_t i = 0; i < actual.rows.size(); ++i) {
      for (std::size_t c = 0; c < actual.header.size(); ++c) {
        const double a = io::parse_double(actual.rows[i][c]);
        const double e = io::parse_double(expected.rows[i][c]);
        if (std::isnan(a) && std::isnan(e)) continue;
        worst = std::max(worst, std::abs(a - e));
      }
    }
  }
  return worst;
}

}  // namespace arff
