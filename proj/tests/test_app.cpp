#include "arff/app/experiment.hpp"
#include "arff/app/image.hpp"
#include "arff/app/io.hpp"
#include "arff/app/kde.hpp"
#include "arff/errors.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <numbers>

using namespace arff;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("arff_test_" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Eigen::MatrixXd random_matrix(Index r, Index c, CounterRng& rng) {
  Eigen::MatrixXd m(r, c);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = standard_normal(rng);
  return m;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ARFF_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("number formatting round-trips exactly") {
  CounterRng rng(1);
  for (int i = 0; i < 10000; ++i) {
    const double v = std::ldexp(standard_normal(rng), static_cast<int>(uniform_index(rng, 200)) - 100);
    REQUIRE(io::parse_double(io::format_double(v)) == v);
  }
  CHECK(std::isnan(io::parse_double(io::format_double(std::nan("")))));
  CHECK(io::parse_double(io::format_double(-INFINITY)) == -INFINITY);
  CHECK_THROWS(io::parse_double("1.0x"));
}

TEST_CASE("CSV tables") {
  io::CsvTable t;
  t.header = {"a", "b"};
  t.add_row({"1", "x"});
  t.add_row({"2.5", "y"});
  const io::CsvTable back = io::parse_csv(t.str());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
  CHECK(back.number(1, "a") == 2.5);
  CHECK(back.text(0, "b") == "x");
  CHECK_FALSE(back.has_column("c"));
  CHECK_THROWS(back.column("c"));
  CHECK_THROWS(t.add_row({"1"}));
}

TEST_CASE("trace CSV and summary") {
  const Dataset data = normalize(generate_dataset(60, TargetSpec::identity(2, 0.5), 1)).first;
  ArffConfig c;
  c.iterations = 12;
  c.batch_size = 40;
  apply_variant(c, Variant::kAdaptiveMetropolisResampling);
  const TrainTrace t = train(c, data, FrequencySet::zeros(6, 2), &data);
  const auto parsed = io::parse_trace(io::parse_csv(io::trace_table(t.records).str()));
  REQUIRE(parsed.size() == t.records.size());
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    CHECK(parsed[i].iteration == t.records[i].iteration);
    CHECK(parsed[i].train_error == t.records[i].train_error);
    CHECK(parsed[i].test_mse == t.records[i].test_mse);
    CHECK(parsed[i].ess == t.records[i].ess);
    CHECK(parsed[i].resampled == t.records[i].resampled);
    CHECK(parsed[i].solves == t.records[i].solves);
  }
  const auto s = io::trace_summary(t);
  double best = INFINITY;
  for (const auto& r : t.records) best = std::min(best, r.train_error);
  CHECK(s["min_train_err"].get<double>() == best);
  CHECK(s["digest"].get<std::string>() == io::state_digest(t.frequencies, t.amplitudes));
  CHECK(s["digest"].get<std::string>().size() == 16);
}

TEST_CASE("model files round-trip") {
  CounterRng rng(2);
  Eigen::MatrixXcd a(5, 3);
  for (Index i = 0; i < a.size(); ++i) a.data()[i] = {standard_normal(rng), standard_normal(rng)};
  io::ShallowModel m{FrequencySet(random_matrix(5, 4, rng)), AmplitudeVector(a, NormKind::kTwoNorm),
                     ActivationKind::kComplexExp, Dataset::identity_stats(4, 3)};
  const auto j = nlohmann::json::parse(io::model_to_json(m).dump());
  CHECK(io::model_kind(j) == "shallow");
  const io::ShallowModel back = io::shallow_model_from_json(j);
  CHECK(back.frequencies == m.frequencies);
  CHECK(back.amplitudes.values() == m.amplitudes.values());
  CHECK(back.amplitudes.norm_kind() == NormKind::kTwoNorm);
  REQUIRE(back.stats.has_value());
  CHECK(back.stats->input_std == m.stats->input_std);

  ImageModelOptions o;
  o.width = 8;
  const MlpModel net = image_model(ImageApproach::kGlorotRff, o, rng);
  const auto jn = nlohmann::json::parse(io::model_to_json(net).dump());
  CHECK(io::model_kind(jn) == "mlp");
  const MlpModel nb = io::mlp_model_from_json(jn);
  REQUIRE(nb.layers().size() == net.layers().size());
  for (std::size_t l = 0; l < nb.layers().size(); ++l) {
    CHECK(nb.layers()[l].weights == net.layers()[l].weights);
    CHECK(nb.layers()[l].bias == net.layers()[l].bias);
    CHECK(nb.layers()[l].activation == net.layers()[l].activation);
    CHECK(nb.layers()[l].bias_fixed_zero == net.layers()[l].bias_fixed_zero);
  }
  nlohmann::json bad = j;
  bad["version"] = 99;
  CHECK_THROWS(io::shallow_model_from_json(bad));
}

TEST_CASE("dataset files round-trip") {
  const fs::path dir = scratch("dataset");
  const auto [d, stats] = normalize(generate_dataset(50, TargetSpec::published_rotation(), 3));
  io::save_dataset(dir / "d.bin", d);
  CHECK(fs::exists(io::sidecar_path(dir / "d.bin")));
  const Dataset b = io::load_dataset(dir / "d.bin");
  CHECK(b.inputs == d.inputs);
  CHECK(b.outputs == d.outputs);
  CHECK(b.stats.input_mean == stats.input_mean);
  CHECK(b.provenance == d.provenance);
  const Dataset c = io::dataset_from_table(io::parse_csv(io::dataset_table(d).str()));
  CHECK(c.inputs == d.inputs);
  CHECK(c.outputs == d.outputs);
  CHECK_THROWS(io::load_dataset(dir / "missing.bin"));
}

TEST_CASE("kernel density estimate of a standard normal sample") {
  CounterRng rng(4);
  Eigen::VectorXd x(20000);
  for (Index i = 0; i < x.size(); ++i) x(i) = standard_normal(rng);
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / (x.size() - 1));
  CHECK(silverman_bandwidth(x) == doctest::Approx(std::pow(4.0 / (3.0 * x.size()), 0.2) * sd).epsilon(1e-14));
  const KdeEstimate e = kde(x);
  CHECK(std::abs(trapezoid_integral(e) - 1.0) <= 1e-3);
  double worst = 0.0;
  for (Index i = 0; i < e.grid.size(); ++i) {
    const double pdf = std::exp(-0.5 * e.grid(i) * e.grid(i)) / std::sqrt(2 * std::numbers::pi);
    worst = std::max(worst, std::abs(e.density(i) - pdf));
  }
  CHECK(worst <= 0.015);
  Eigen::VectorXd same = Eigen::VectorXd::Constant(10, 3.0);
  CHECK(silverman_bandwidth(same) > 0.0);
}

TEST_CASE("image ingestion splits pixels by coordinate parity") {
  Image img;
  img.width = 6;
  img.height = 5;
  img.rgb.resize(30, 3);
  for (Index r = 0; r < 5; ++r)
    for (Index c = 0; c < 6; ++c) img.rgb.row(r * 6 + c) << r / 10.0, c / 10.0, 0.5;
  const ImageSplit s = ingest_image(img, 4);
  REQUIRE(s.train.size() == 4);
  REQUIRE(s.test.size() == 4);
  // Centered 4x4 crop starts at column 1, row 0.
  for (Index j = 0; j < 4; ++j) {
    const double u = s.train.inputs(j, 0) * 3, v = s.train.inputs(j, 1) * 3;
    CHECK(std::fmod(std::round(u), 2.0) == 0.0);
    CHECK(std::fmod(std::round(v), 2.0) == 0.0);
    CHECK(s.train.outputs(j, 1) == doctest::Approx((std::round(u) + 1) / 10.0));
    CHECK(s.train.outputs(j, 0) == doctest::Approx(std::round(v) / 10.0));
    const double ut = s.test.inputs(j, 0) * 3, vt = s.test.inputs(j, 1) * 3;
    CHECK(std::fmod(std::round(ut), 2.0) == 1.0);
    CHECK(std::fmod(std::round(vt), 2.0) == 1.0);
  }
  CHECK_THROWS(ingest_image(img, 6));
}

TEST_CASE("PNG round-trip at 8 bits") {
  const fs::path dir = scratch("png");
  const Image img = synthetic_striped_image(16);
  write_png(dir / "s.png", img);
  const Image back = read_png(dir / "s.png");
  CHECK(back.width == 16);
  CHECK(back.height == 16);
  CHECK((back.rgb - img.rgb).cwiseAbs().maxCoeff() <= 0.5 / 255 + 1e-12);
  CHECK(img.rgb.minCoeff() >= 0.0);
  CHECK(img.rgb.maxCoeff() <= 1.0);
}

TEST_CASE("sample statistics") {
  const SampleStats s = sample_stats({1.0, 2.0, 3.0, 4.0});
  CHECK(s.mean == 2.5);
  CHECK(s.std == doctest::Approx(std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(s.lo == doctest::Approx(2.5 - 2 * std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(s.hi == doctest::Approx(2.5 + 2 * std::sqrt(5.0 / 3.0)).epsilon(1e-15));
  CHECK(sample_stats({7.0}).std == 0.0);
}

TEST_CASE("realization data uses training statistics for the test set") {
  const auto [train, test] = realization_data(TargetSpec::published_rotation(), 300, 200, 5);
  CHECK(std::abs(train.inputs.col(0).mean()) <= 1e-12);
  CHECK(test.stats.input_mean == train.stats.input_mean);
  CHECK(std::abs(test.inputs.col(0).mean()) > 1e-6);
  CHECK(realization_seed(1, 32, 0) != realization_seed(1, 32, 1));
  CHECK(realization_seed(1, 32, 0) != realization_seed(1, 64, 0));
}

TEST_CASE("small sweep: aggregates, determinism, thread independence") {
  ExperimentConfig c = default_experiment(ExperimentKind::kStats);
  c.nodes = {4, 6};
  c.deltas.clear();
  c.iterations = 15;
  c.realizations = 3;
  c.test_size = 50;
  c.snapshot_iterations = {0, 15};
  c.output = scratch("sweep_a");
  c.threads = 1;
  const ExperimentOutcome a = run_experiment(c);
  CHECK(aggregate_discrepancy(a.directory) <= 1e-12);
  c.output = scratch("sweep_b");
  c.threads = 3;
  const ExperimentOutcome b = run_experiment(c);
  REQUIRE(a.files == b.files);
  int csv = 0;
  for (const auto& f : a.files) {
    if (fs::path(f).extension() != ".csv") continue;
    ++csv;
    CHECK(io::read_file(a.directory / f) == io::read_file(b.directory / f));
  }
  CHECK(csv > 10);
  const auto manifest = nlohmann::json::parse(io::read_file(a.directory / "manifest.json"));
  CHECK(manifest["format"].is_string());
  CHECK(fs::exists(a.directory / "timing.json"));
}

TEST_CASE("experiment configuration checks") {
  ExperimentConfig c = default_experiment(ExperimentKind::kFullData);
  CHECK_NOTHROW(c.validate());
  c.deltas = {0.1, 0.2};
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = default_experiment(ExperimentKind::kFullData);
  c.realizations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK(parse_batch_size("full") == kFullBatch);
  CHECK(parse_batch_size("K^1.5") == kPowerBatch);
  CHECK(resolve_batch_size(kPowerBatch, 64, 4096) == 512);
  CHECK(resolve_batch_size(kFullBatch, 64, 4096) == 4096);
  CHECK_THROWS(parse_experiment_kind("nope"));
  for (auto k : {ExperimentKind::kStats, ExperimentKind::kFullData, ExperimentKind::kGamma, ExperimentKind::kBatch,
                 ExperimentKind::kInit, ExperimentKind::kPretrain, ExperimentKind::kImage}) {
    CHECK(parse_experiment_kind(to_string(k)) == k);
    CHECK_NOTHROW(default_experiment(k).validate());
    CHECK_NOTHROW(default_experiment(k, true).validate());
  }
}

TEST_CASE("command line exit codes") {
  const fs::path dir = scratch("cli");
  CHECK(run_cli("") == 2);
  CHECK(run_cli("train -K 0 -o " + (dir / "x").string()) == 2);
  CHECK(run_cli("sweep --kind nope -o " + (dir / "y").string()) == 2);
  CHECK(run_cli("report --dir " + (dir / "missing").string()) == 1);
  CHECK(run_cli("gen-data -M 30 -o " + (dir / "d.csv").string()) == 0);
  CHECK(run_cli("train --data " + (dir / "d.csv").string() + " -K 4 -N 5 -o " + (dir / "t").string()) == 0);
  CHECK(fs::exists(dir / "t" / "trace.csv"));
  CHECK(fs::exists(dir / "t" / "model.json"));
  CHECK(run_cli("kde --model " + (dir / "t" / "model.json").string() + " -o " + (dir / "k.csv").string()) == 0);
}
