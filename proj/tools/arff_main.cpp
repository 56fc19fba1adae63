// arff: dataset generation, training runs, sweeps, statistics, KDE, Adam
// pretraining comparison, image pipeline and run reports.

#include "arff/app/experiment.hpp"
#include "arff/app/image.hpp"
#include "arff/app/io.hpp"
#include "arff/app/kde.hpp"
#include "arff/app/runtime.hpp"
#include "arff/arff.hpp"
#include "arff/errors.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace arff;

namespace {

bool is_csv(const fs::path& p) { return p.extension() == ".csv"; }

Dataset load_any_dataset(const fs::path& path) {
  return is_csv(path) ? io::dataset_from_table(io::read_csv(path)) : io::load_dataset(path);
}

TargetSpec make_target(const std::string& rotation, double alpha) {
  if (rotation == "identity") return TargetSpec::identity(4, alpha);
  if (rotation == "published") return TargetSpec::published_rotation(alpha);
  throw ConfigError("rotation must be 'published' or 'identity', got '" + rotation + "'");
}

std::vector<Variant> parse_variants(const std::vector<std::string>& names) {
  std::vector<Variant> out;
  for (const auto& n : names) out.push_back(parse_variant(n));
  return out;
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
  Index count = 4096;
  std::uint64_t seed = 0;
  double alpha = 0.01;
  std::string rotation = "published";
  bool normalize = false;
  std::string out;
};

void add_gen_data(CLI::App& app, GenDataArgs& a) {
  auto* cmd = app.add_subcommand("gen-data", "Generate a regularized-discontinuity dataset");
  cmd->add_option("--count,-M", a.count, "Number of points")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Seed")->capture_default_str();
  cmd->add_option("--alpha", a.alpha, "Width of the Si transition")->capture_default_str();
  cmd->add_option("--rotation", a.rotation, "published | identity")->capture_default_str();
  cmd->add_flag("--normalize", a.normalize, "Store componentwise-normalized data");
  cmd->add_option("--out,-o", a.out, "Output file (.csv, otherwise binary with a .json sidecar)")->required();
  cmd->callback([&a] {
    if (a.count < 1) throw ConfigError("count must be >= 1");
    Dataset data = generate_dataset(a.count, make_target(a.rotation, a.alpha), a.seed);
    if (a.normalize) data = normalize(data).first;
    if (is_csv(a.out))
      io::write_file_atomic(a.out, io::dataset_table(data).str());
    else
      io::save_dataset(a.out, data);
  });
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string test_data;
  Index count = 0;
  Index test_count = 1000;
  std::string rotation = "published";
  double alpha = 0.01;
  Index nodes = 32;
  Index iterations = 1000;
  double delta = 0.5;
  double gamma = 10.0;
  std::string batch = "full";
  double lambda = 0.1;
  std::string variant = "AM-R";
  std::optional<double> resample;
  std::optional<bool> metropolis;
  Index warmup = 0;
  double warmup_resample = 1.0;
  bool warmup_metropolis = true;
  std::string activation = "complex-exp";
  std::string norm = "modulus";
  double init_std = 0.0;
  std::uint64_t seed = 0;
  std::string out;
};

void add_train(CLI::App& app, TrainArgs& a) {
  auto* cmd = app.add_subcommand("train", "Train one shallow network with the adaptive sampler");
  cmd->add_option("--data", a.data, "Training dataset (binary or .csv); generated when absent");
  cmd->add_option("--test-data", a.test_data, "Test dataset; generated alongside generated training data");
  cmd->add_option("--count,-M", a.count, "Generated training points (default K^2)");
  cmd->add_option("--test-count", a.test_count, "Generated test points")->capture_default_str();
  cmd->add_option("--rotation", a.rotation, "published | identity")->capture_default_str();
  cmd->add_option("--alpha", a.alpha, "Width of the Si transition")->capture_default_str();
  cmd->add_option("--nodes,-K", a.nodes, "Number of nodes K")->capture_default_str();
  cmd->add_option("--iterations,-N", a.iterations, "Iterations N")->capture_default_str();
  cmd->add_option("--delta", a.delta, "Proposal step standard deviation")->capture_default_str();
  cmd->add_option("--gamma", a.gamma, "Metropolis exponent")->capture_default_str();
  cmd->add_option("--batch", a.batch, "Batch size: count, 'full' or 'K^1.5'")->capture_default_str();
  cmd->add_option("--lambda", a.lambda, "Tikhonov parameter")->capture_default_str();
  cmd->add_option("--variant", a.variant, "AM | AM-R | RW-R")->capture_default_str();
  cmd->add_option("--resample", a.resample, "Resampling threshold R (overrides the variant)");
  cmd->add_option("--metropolis", a.metropolis, "Metropolis switch A (overrides the variant)");
  cmd->add_option("--warmup", a.warmup, "Iterations using the warm-up R and A")->capture_default_str();
  cmd->add_option("--warmup-resample", a.warmup_resample, "R during warm-up")->capture_default_str();
  cmd->add_option("--warmup-metropolis", a.warmup_metropolis, "A during warm-up")->capture_default_str();
  cmd->add_option("--activation", a.activation, "complex-exp | cosine")->capture_default_str();
  cmd->add_option("--norm", a.norm, "modulus | two-norm")->capture_default_str();
  cmd->add_option("--init-std", a.init_std, "Std of the initial frequencies (0: all zero)")->capture_default_str();
  cmd->add_option("--seed", a.seed, "Seed")->capture_default_str();
  cmd->add_option("--out,-o", a.out, "Output directory")->required();
  cmd->callback([&a] {
    const TargetSpec spec = make_target(a.rotation, a.alpha);
    Dataset train_data;
    std::optional<Dataset> test_data;
    if (!a.data.empty()) {
      train_data = load_any_dataset(a.data);
      if (!a.test_data.empty()) test_data = load_any_dataset(a.test_data);
    } else {
      const Index m = a.count > 0 ? a.count : a.nodes * a.nodes;
      auto [tr, te] = realization_data(spec, m, a.test_count, a.seed);
      train_data = std::move(tr);
      if (a.test_count > 0) test_data = std::move(te);
    }
    ArffConfig c;
    c.iterations = a.iterations;
    c.step_stddev = a.delta;
    c.gamma = a.gamma;
    c.batch_size = resolve_batch_size(parse_batch_size(a.batch), a.nodes, train_data.size());
    c.lambda = a.lambda;
    c.activation = parse_activation(a.activation);
    c.norm_kind = parse_norm_kind(a.norm);
    c.seed = a.seed;
    apply_variant(c, parse_variant(a.variant));
    if (a.resample) c.resample_rule.value = *a.resample;
    if (a.metropolis) c.metropolis_rule.value = *a.metropolis;
    c.resample_rule.warmup = c.metropolis_rule.warmup = a.warmup;
    c.resample_rule.warmup_value = a.warmup > 0 ? a.warmup_resample : c.resample_rule.value;
    c.metropolis_rule.warmup_value = a.warmup > 0 ? a.warmup_metropolis : c.metropolis_rule.value;
    const Index dim = train_data.input_dimension() + (c.activation == ActivationKind::kCosineBias ? 1 : 0);
    c.validate(a.nodes, train_data.size());

    const TrainTrace trace =
        train(c, train_data, initial_frequencies(a.nodes, dim, a.init_std, a.seed), test_data ? &*test_data : nullptr);
    const fs::path out = a.out;
    io::write_file_atomic(out / "trace.csv", io::trace_table(trace.records).str());
    io::write_file_atomic(out / "summary.json", io::trace_summary(trace).dump(2) + "\n");
    io::ShallowModel model{trace.frequencies, trace.amplitudes, c.activation, train_data.stats};
    io::write_file_atomic(out / "model.json", io::model_to_json(model).dump() + "\n");
    json run;
    run["nodes"] = a.nodes;
    run["iterations"] = c.iterations;
    run["delta"] = c.step_stddev;
    run["gamma"] = c.gamma;
    run["batch_size"] = c.batch_size;
    run["lambda"] = c.lambda;
    run["resample"] = c.resample_rule.value;
    run["metropolis"] = c.metropolis_rule.value;
    run["warmup"] = a.warmup;
    run["activation"] = std::string(to_string(c.activation));
    run["norm"] = std::string(to_string(c.norm_kind));
    run["init_std"] = a.init_std;
    run["seed"] = c.seed;
    run["data"] = a.data.empty() ? json("generated") : json(a.data);
    io::write_file_atomic(out / "run.json", run.dump(2) + "\n");
  });
}

// ---------------------------------------------------------------- sweep / stats

struct SweepArgs {
  std::string kind;
  bool paper_scale = false;
  std::vector<Index> nodes;
  std::vector<double> deltas;
  std::vector<double> gammas;
  std::vector<std::string> batches;
  bool batch_paired = false;
  std::vector<double> init_stds;
  std::vector<std::string> variants;
  Index iterations = 0;
  double lambda = 0.1;
  Index data_size = 0;
  Index test_size = 0;
  Index realizations = 1;
  std::uint64_t seed = 0;
  std::string rotation = "published";
  double alpha = 0.01;
  unsigned threads = 1;
  std::vector<Index> snapshots;
  std::vector<Index> kde_axes;
  Index pretrain_iterations = 300;
  Index epochs = 400;
  Index adam_batch = 128;
  double learning_rate = 5e-4;
  bool freeze = false;
  std::string out;

  std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> setters;
};

template <typename T>
void bind_option(CLI::App* cmd, SweepArgs& a, const std::string& name, T& field, const std::string& help,
          std::function<void(ExperimentConfig&)> apply) {
  CLI::Option* opt = cmd->add_option(name, field, help)->delimiter(',');
  a.setters.emplace_back(opt, std::move(apply));
}

ExperimentConfig build_config(SweepArgs& a, ExperimentKind kind) {
  ExperimentConfig c = default_experiment(kind, a.paper_scale);
  for (auto& [opt, apply] : a.setters)
    if (opt->count() > 0) apply(c);
  if (c.kind == ExperimentKind::kInit && c.snapshot_iterations.empty())
    c.snapshot_iterations = {0, c.iterations};
  return c;
}

CLI::App* add_sweep_options(CLI::App* cmd, SweepArgs& a, bool with_kind) {
  if (with_kind) {
    cmd->add_option("--kind", a.kind, "test2_fulldata | test3_gamma | test4_batch | test5_init | test1_stats")
        ->required();
  }
  cmd->add_flag("--paper-scale", a.paper_scale, "Start from the published parameter tables");
  bind_option(cmd, a, "--nodes,-K", a.nodes, "Node counts K", [&a](ExperimentConfig& c) {
    c.nodes = a.nodes;
    if (c.deltas.size() > 1 && c.deltas.size() != c.nodes.size()) c.deltas.clear();
  });
  bind_option(cmd, a, "--deltas", a.deltas, "Proposal std per K (or one value)",
       [&a](ExperimentConfig& c) { c.deltas = a.deltas; });
  bind_option(cmd, a, "--gammas", a.gammas, "Metropolis exponents", [&a](ExperimentConfig& c) { c.gammas = a.gammas; });
  bind_option(cmd, a, "--batches", a.batches, "Batch sizes: counts, 'full' or 'K^1.5'", [&a](ExperimentConfig& c) {
    c.batch_sizes.clear();
    for (const auto& b : a.batches) c.batch_sizes.push_back(parse_batch_size(b));
  });
  auto* paired = cmd->add_flag("--batch-paired", a.batch_paired, "Pair batch sizes with node counts");
  a.setters.emplace_back(paired, [&a](ExperimentConfig& c) { c.batch_paired = a.batch_paired; });
  bind_option(cmd, a, "--init-stds", a.init_stds, "Std of the initial frequency distribution (0: zeros)",
       [&a](ExperimentConfig& c) { c.init_stds = a.init_stds; });
  bind_option(cmd, a, "--variants", a.variants, "Subset of AM AM-R RW-R",
       [&a](ExperimentConfig& c) { c.variants = parse_variants(a.variants); });
  bind_option(cmd, a, "--iterations,-N", a.iterations, "Iterations N", [&a](ExperimentConfig& c) { c.iterations = a.iterations; });
  bind_option(cmd, a, "--lambda", a.lambda, "Tikhonov parameter", [&a](ExperimentConfig& c) { c.lambda = a.lambda; });
  bind_option(cmd, a, "--data-size,-M", a.data_size, "Training points (0: K^2)",
       [&a](ExperimentConfig& c) { c.data_size = a.data_size; });
  bind_option(cmd, a, "--test-size", a.test_size, "Independent test points",
       [&a](ExperimentConfig& c) { c.test_size = a.test_size; });
  bind_option(cmd, a, "--realizations,-R", a.realizations, "Independent realizations",
       [&a](ExperimentConfig& c) { c.realizations = a.realizations; });
  bind_option(cmd, a, "--seed", a.seed, "Master seed", [&a](ExperimentConfig& c) { c.seed = a.seed; });
  bind_option(cmd, a, "--rotation", a.rotation, "published | identity",
       [&a](ExperimentConfig& c) {
         make_target(a.rotation, c.alpha);
         c.identity_rotation = a.rotation == "identity";
       });
  bind_option(cmd, a, "--alpha", a.alpha, "Width of the Si transition", [&a](ExperimentConfig& c) { c.alpha = a.alpha; });
  bind_option(cmd, a, "--threads,-j", a.threads, "Worker threads over realizations",
       [&a](ExperimentConfig& c) { c.threads = a.threads; });
  bind_option(cmd, a, "--snapshots", a.snapshots, "Iterations with KDE snapshots",
       [&a](ExperimentConfig& c) { c.snapshot_iterations = a.snapshots; });
  bind_option(cmd, a, "--kde-axes", a.kde_axes, "Axes j (1-based) of [B^-1 w]_j for KDE snapshots",
       [&a](ExperimentConfig& c) {
         c.kde_axes.clear();
         for (Index j : a.kde_axes) c.kde_axes.push_back(j - 1);
       });
  auto* out = cmd->add_option("--out,-o", a.out, "Output directory")->required();
  a.setters.emplace_back(out, [&a](ExperimentConfig& c) { c.output = a.out; });
  return cmd;
}

void print_outcome(const ExperimentOutcome& outcome) {
  json j;
  j["directory"] = outcome.directory.string();
  j["files"] = outcome.files.size();
  std::cout << j.dump() << "\n";
}

// ---------------------------------------------------------------- kde

struct KdeArgs {
  std::string model;
  std::string samples;
  Index axis = 1;
  std::string rotation = "published";
  double alpha = 0.01;
  std::optional<double> bandwidth;
  std::optional<double> grid_min, grid_max;
  Index grid_points = 512;
  std::string out;
};

void add_kde(CLI::App& app, KdeArgs& a) {
  auto* cmd = app.add_subcommand("kde", "Kernel density estimate of a frequency marginal [B^-1 w]_j");
  auto* m = cmd->add_option("--model", a.model, "Shallow model file");
  auto* s = cmd->add_option("--samples", a.samples, "CSV with a 'value' column (used as-is)");
  m->excludes(s);
  cmd->add_option("--axis", a.axis, "Coordinate j (1-based)")->capture_default_str();
  cmd->add_option("--rotation", a.rotation, "published | identity")->capture_default_str();
  cmd->add_option("--alpha", a.alpha, "Width of the Si transition (for p_star)")->capture_default_str();
  cmd->add_option("--bandwidth", a.bandwidth, "Kernel bandwidth (default: Silverman)");
  cmd->add_option("--grid-min", a.grid_min, "Grid start");
  cmd->add_option("--grid-max", a.grid_max, "Grid end");
  cmd->add_option("--grid-points", a.grid_points, "Grid size")->capture_default_str();
  cmd->add_option("--out,-o", a.out, "Output CSV")->required();
  cmd->callback([&a] {
    Eigen::VectorXd samples;
    bool projected = false;
    if (!a.model.empty()) {
      const io::ShallowModel model = io::shallow_model_from_json(json::parse(io::read_file(a.model)));
      const TargetSpec spec = make_target(a.rotation, a.alpha);
      const Eigen::MatrixXd w = model.frequencies.vectors().leftCols(spec.dimension());
      if (a.axis < 1 || a.axis > spec.dimension()) throw ConfigError("axis out of range");
      samples = (w * spec.rotation()).col(a.axis - 1);
      projected = true;
    } else if (!a.samples.empty()) {
      const io::CsvTable t = io::read_csv(a.samples);
      samples.resize(static_cast<Index>(t.rows.size()));
      for (std::size_t i = 0; i < t.rows.size(); ++i) samples(static_cast<Index>(i)) = t.number(i, "value");
    } else {
      throw ConfigError("one of --model or --samples is required");
    }
    if (samples.size() < 2) throw ConfigError("KDE needs at least two samples");
    const double h = a.bandwidth ? *a.bandwidth : silverman_bandwidth(samples);
    Eigen::VectorXd grid = default_kde_grid(samples, h, a.grid_points);
    if (a.grid_min || a.grid_max)
      grid = Eigen::VectorXd::LinSpaced(a.grid_points, a.grid_min.value_or(grid(0)),
                                        a.grid_max.value_or(grid(grid.size() - 1)));
    const KdeEstimate est = kde(samples, grid, h);
    io::CsvTable t;
    t.header = {"grid", "density"};
    std::optional<SiFactorTransform> transform;
    double si_l1 = 0.0;
    if (projected) {
      t.header.push_back("p_star");
      transform.emplace(a.alpha);
      si_l1 = fourier_l1_norm(TargetSpec::identity(1, a.alpha)).one_dimensional;
    }
    for (Index g = 0; g < grid.size(); ++g) {
      std::vector<std::string> row{io::format_double(grid(g)), io::format_double(est.density(g))};
      if (projected)
        row.push_back(io::format_double(optimal_marginal_density(grid(g), a.axis - 1, a.alpha, si_l1, &*transform)));
      t.add_row(std::move(row));
    }
    io::write_file_atomic(a.out, t.str());
  });
}

// ---------------------------------------------------------------- image

struct ImageArgs {
  std::vector<std::string> images;
  std::vector<int> approaches;
  bool paper_scale = false;
  ImagePipelineConfig defaults;
  Index realizations = 1;
  std::uint64_t seed = 0;
  std::string out;
  std::vector<std::pair<CLI::Option*, std::function<void(ExperimentConfig&)>>> setters;
};

void add_image(CLI::App& app, ImageArgs& a) {
  auto* cmd = app.add_subcommand("image", "Coordinate-MLP image regression, four approaches, PSNR report");
  auto& d = a.defaults;
  auto bind_image = [&](const std::string& name, auto& field, const std::string& help, auto apply) {
    a.setters.emplace_back(cmd->add_option(name, field, help), apply);
  };
  cmd->add_flag("--paper-scale", a.paper_scale, "512 crop and 2000 epochs");
  bind_image("--image", a.images, "PNG files (default: synthetic striped image)",
             [&a](ExperimentConfig& c) { c.image.images.assign(a.images.begin(), a.images.end()); });
  bind_image("--approaches", a.approaches, "Subset of 1 2 3 4", [&a](ExperimentConfig& c) {
    c.image.approaches.clear();
    for (int x : a.approaches) {
      if (x < 1 || x > 4) throw ConfigError("approaches must be in 1..4");
      c.image.approaches.push_back(static_cast<ImageApproach>(x));
    }
  });
  bind_image("--synthetic-size", d.synthetic_size, "Synthetic image side",
             [&a](ExperimentConfig& c) { c.image.synthetic_size = a.defaults.synthetic_size; });
  bind_image("--crop", d.crop, "Centered crop side", [&a](ExperimentConfig& c) { c.image.crop = a.defaults.crop; });
  bind_image("--nodes,-K", d.nodes, "RFF/hidden width", [&a](ExperimentConfig& c) { c.image.nodes = a.defaults.nodes; });
  bind_image("--arff-iterations", d.arff_iterations, "Frequency-sampling iterations",
             [&a](ExperimentConfig& c) { c.image.arff_iterations = a.defaults.arff_iterations; });
  bind_image("--arff-lambda", d.arff_lambda, "Frequency-sampling Tikhonov parameter",
             [&a](ExperimentConfig& c) { c.image.arff_lambda = a.defaults.arff_lambda; });
  bind_image("--arff-delta", d.arff_delta, "Frequency-sampling step std",
             [&a](ExperimentConfig& c) { c.image.arff_delta = a.defaults.arff_delta; });
  bind_image("--relu-layers", d.relu_layers, "ReLU layers after the RFF layer",
             [&a](ExperimentConfig& c) { c.image.relu_layers = a.defaults.relu_layers; });
  bind_image("--epochs", d.epochs, "Adam epochs", [&a](ExperimentConfig& c) { c.image.epochs = a.defaults.epochs; });
  bind_image("--batch", d.batch_size, "Adam batch size",
             [&a](ExperimentConfig& c) { c.image.batch_size = a.defaults.batch_size; });
  bind_image("--lr", d.learning_rate, "Adam learning rate",
             [&a](ExperimentConfig& c) { c.image.learning_rate = a.defaults.learning_rate; });
  auto* freeze = cmd->add_flag("--freeze-rff", d.freeze_rff_layer, "Keep the RFF layer fixed during Adam");
  a.setters.emplace_back(freeze, [&a](ExperimentConfig& c) { c.image.freeze_rff_layer = a.defaults.freeze_rff_layer; });
  bind_image("--realizations,-R", a.realizations, "Seeds per image",
             [&a](ExperimentConfig& c) { c.realizations = a.realizations; });
  bind_image("--seed", a.seed, "Master seed", [&a](ExperimentConfig& c) { c.seed = a.seed; });
  bind_image("--out,-o", a.out, "Output directory", [&a](ExperimentConfig& c) { c.output = a.out; });
  cmd->get_option("--out")->required();
  cmd->callback([&a] {
    ExperimentConfig c = default_experiment(ExperimentKind::kImage, a.paper_scale);
    for (auto& [opt, apply] : a.setters)
      if (opt->count() > 0) apply(c);
    print_outcome(run_experiment(c));
  });
}

// ---------------------------------------------------------------- report

struct ReportArgs {
  std::string dir;
  double tolerance = 1e-12;
};

void add_report(CLI::App& app, ReportArgs& a) {
  auto* cmd = app.add_subcommand("report", "Check a run directory and summarize it");
  cmd->add_option("dir,--dir,-d", a.dir, "Run directory")->required();
  cmd->add_option("--tolerance", a.tolerance, "Allowed aggregate discrepancy")->capture_default_str();
  cmd->callback([&a] {
    const fs::path dir = a.dir;
    const json manifest = json::parse(io::read_file(dir / "manifest.json"));
    json report;
    report["kind"] = manifest.at("config").at("kind");
    std::size_t csv_files = 0;
    for (const json& f : manifest.at("files")) {
      const std::string name = f.get<std::string>();
      if (!fs::exists(dir / name)) throw std::runtime_error("listed file missing: " + name);
      if (fs::path(name).extension() == ".csv") {
        io::read_csv(dir / name);
        ++csv_files;
      }
    }
    report["csv_files_parsed"] = csv_files;
    if (manifest.contains("aggregates")) {
      const double worst = aggregate_discrepancy(dir);
      report["aggregate_discrepancy"] = worst;
      report["aggregates_consistent"] = worst <= a.tolerance;
      const io::CsvTable conv = io::read_csv(dir / "aggregate/convergence.csv");
      json rows = json::array();
      for (std::size_t i = 0; i < conv.rows.size(); ++i)
        rows.push_back({{"group", conv.text(i, "group")},
                        {"variant", conv.text(i, "variant")},
                        {"min_train_err_mean", conv.number(i, "min_train_err_mean")},
                        {"min_train_mse_mean", conv.number(i, "min_train_mse_mean")},
                        {"min_test_mse_mean", conv.number(i, "min_test_mse_mean")},
                        {"bound", conv.number(i, "bound")}});
      report["convergence"] = rows;
    }
    if (fs::exists(dir / "psnr_summary.csv")) {
      const io::CsvTable t = io::read_csv(dir / "psnr_summary.csv");
      json rows = json::array();
      for (std::size_t i = 0; i < t.rows.size(); ++i)
        rows.push_back({{"approach", t.text(i, "approach")}, {"mean", t.number(i, "mean")}, {"std", t.number(i, "std")}});
      report["psnr"] = rows;
    }
    std::cout << report.dump(2) << "\n";
    if (report.contains("aggregates_consistent") && !report["aggregates_consistent"].get<bool>())
      throw std::runtime_error("aggregate statistics do not match the per-run traces");
  });
}

int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  tune_allocator();
  CLI::App app{"Adaptive random Fourier features: training, experiments and reports"};
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
  app.require_subcommand(1);

  GenDataArgs gen;
  TrainArgs tr;
  SweepArgs sweep, stats, pretrain;
  KdeArgs kd;
  ImageArgs img;
  ReportArgs rep;
  add_gen_data(app, gen);
  add_train(app, tr);

  auto* sweep_cmd = add_sweep_options(app.add_subcommand("sweep", "Parameter sweep over K, gamma, M_B, initial std"),
                                      sweep, true);
  sweep_cmd->callback([&sweep] {
    print_outcome(run_experiment(build_config(sweep, parse_experiment_kind(sweep.kind))));
  });
  auto* stats_cmd = add_sweep_options(
      app.add_subcommand("stats", "Statistics over independent realizations (mean, std, +-2 std)"), stats, false);
  stats_cmd->callback([&stats] { print_outcome(run_experiment(build_config(stats, ExperimentKind::kStats))); });

  auto* pre_cmd = add_sweep_options(
      app.add_subcommand("pretrain-adam", "Adam alone vs sampler pretraining + Adam vs sampler alone"), pretrain,
      false);
  bind_option(pre_cmd, pretrain, "--pretrain-iterations", pretrain.pretrain_iterations, "Sampler iterations before Adam",
       [&pretrain](ExperimentConfig& c) { c.pretrain_iterations = pretrain.pretrain_iterations; });
  bind_option(pre_cmd, pretrain, "--epochs", pretrain.epochs, "Adam epochs",
       [&pretrain](ExperimentConfig& c) { c.adam_epochs = pretrain.epochs; });
  bind_option(pre_cmd, pretrain, "--adam-batch", pretrain.adam_batch, "Adam batch size",
       [&pretrain](ExperimentConfig& c) { c.adam_batch_size = pretrain.adam_batch; });
  bind_option(pre_cmd, pretrain, "--lr", pretrain.learning_rate, "Adam learning rate",
       [&pretrain](ExperimentConfig& c) { c.adam_learning_rate = pretrain.learning_rate; });
  auto* freeze = pre_cmd->add_flag("--freeze-first-layer", pretrain.freeze, "Keep frequencies fixed during Adam");
  pretrain.setters.emplace_back(freeze, [&pretrain](ExperimentConfig& c) { c.freeze_first_layer = pretrain.freeze; });
  pre_cmd->callback([&pretrain] {
    print_outcome(run_experiment(build_config(pretrain, ExperimentKind::kPretrain)));
  });

  add_kde(app, kd);
  add_image(app, img);
  add_report(app, rep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return fail(2, "invalid_configuration", e.what());
  } catch (const ConfigError& e) {
    return fail(2, "invalid_configuration", e.what());
  } catch (const PreconditionError& e) {
    return fail(2, "invalid_configuration", e.what());
  } catch (const std::exception& e) {
    return fail(1, "runtime_failure", e.what());
  }
  return 0;
}
