#include "arff/arff.hpp"
#include "arff/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace arff;

namespace {

AmplitudeVector real_amplitudes(std::initializer_list<double> v) {
  Eigen::MatrixXcd a(static_cast<Index>(v.size()), 1);
  Index i = 0;
  for (double x : v) a(i++, 0) = x;
  return {a, NormKind::kModulus};
}

Dataset small_dataset(Index m, std::uint64_t seed) {
  return normalize(generate_dataset(m, TargetSpec::identity(2, 0.5), seed)).first;
}

ArffConfig base_config(Index m) {
  ArffConfig c;
  c.iterations = 30;
  c.step_stddev = 0.5;
  c.gamma = 4.0;
  c.batch_size = m;
  c.lambda = 0.1;
  c.seed = 9;
  return c;
}

}  // namespace

TEST_CASE("probability mass") {
  const ProbabilityMass p = probability_mass(real_amplitudes({3.0, 1.0}));
  CHECK(p.weights(0) == 0.75);
  CHECK(p.weights(1) == 0.25);
  CHECK_FALSE(p.degenerate);

  Eigen::MatrixXcd c(3, 1);
  c << std::complex<double>(0, 1), std::complex<double>(0, -1), 1.0;
  const ProbabilityMass u = probability_mass({c, NormKind::kModulus});
  for (Index k = 0; k < 3; ++k) CHECK(u.weights(k) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));

  Eigen::MatrixXcd rgb(3, 3);
  rgb << 3, 0, 4, 0, 5, 0, 0, 0, 0;
  const ProbabilityMass q = probability_mass({rgb, NormKind::kTwoNorm});
  CHECK(q.weights(0) == 0.5);
  CHECK(q.weights(1) == 0.5);
  CHECK(q.weights(2) == 0.0);

  const ProbabilityMass z = probability_mass(real_amplitudes({0.0, 0.0, 0.0, 0.0}));
  CHECK(z.degenerate);
  for (Index k = 0; k < 4; ++k) CHECK(z.weights(k) == 0.25);
}

TEST_CASE("effective sample size") {
  ProbabilityMass uniform{Eigen::VectorXd::Constant(512, 1.0 / 512.0)};
  CHECK(effective_sample_size(uniform) == doctest::Approx(512.0).epsilon(1e-12));
  ProbabilityMass one{Eigen::VectorXd::Zero(10)};
  one.weights(3) = 1.0;
  CHECK(effective_sample_size(one) == 1.0);
  ProbabilityMass two{Eigen::Vector2d(0.75, 0.25)};
  CHECK(effective_sample_size(two) == doctest::Approx(1.6).epsilon(1e-15));
}

TEST_CASE("mass and ESS bounds over random amplitudes, invariant under scaling") {
  CounterRng rng(4);
  for (int t = 0; t < 1000; ++t) {
    const Index k = 1 + static_cast<Index>(uniform_index(rng, 64));
    Eigen::MatrixXcd a(k, 1);
    for (Index i = 0; i < k; ++i) a(i, 0) = {standard_normal(rng), standard_normal(rng)};
    if (t % 5 == 0) a(0, 0) *= 1e6;
    const ProbabilityMass p = probability_mass({a, NormKind::kModulus});
    const double ess = effective_sample_size(p);
    REQUIRE(std::abs(p.weights.sum() - 1.0) <= 1e-12);
    REQUIRE(p.weights.minCoeff() >= 0.0);
    REQUIRE(ess >= 1.0 - 1e-12);
    REQUIRE(ess <= k * (1.0 + 1e-12));
    const ProbabilityMass ps = probability_mass({a * 7.3, NormKind::kModulus});
    REQUIRE((ps.weights - p.weights).cwiseAbs().maxCoeff() <= 1e-12);
    REQUIRE(std::abs(effective_sample_size(ps) - ess) <= 1e-12 * ess);
  }
}

TEST_CASE("resampling") {
  CounterRng rng(8);
  Eigen::MatrixXd w(4, 2);
  w << 1, 2, 3, 4, 5, 6, 7, 8;
  const FrequencySet f(w);

  ProbabilityMass first{Eigen::Vector4d(1, 0, 0, 0)};
  const FrequencySet all_first = resample(f, first, rng);
  for (Index k = 0; k < 4; ++k) CHECK(all_first.vectors().row(k) == w.row(0));

  const FrequencySet single(Eigen::MatrixXd::Constant(1, 3, 2.5));
  CHECK(resample(single, ProbabilityMass{Eigen::VectorXd::Ones(1)}, rng) == single);

  // Closure: every output row is bitwise one of the input rows.
  for (int t = 0; t < 200; ++t) {
    Eigen::Vector4d p;
    for (Index k = 0; k < 4; ++k) p(k) = uniform01(rng);
    const FrequencySet out = resample(f, ProbabilityMass{p / p.sum()}, rng);
    for (Index k = 0; k < 4; ++k) {
      bool found = false;
      for (Index j = 0; j < 4; ++j) found = found || out.vectors().row(k) == w.row(j);
      REQUIRE(found);
    }
  }

  // Index-1 rate at p = (0.75, 0.25).
  const FrequencySet pair(Eigen::Vector2d(1.0, 2.0));
  long ones = 0;
  const int draws = 100000;
  for (int t = 0; t < draws / 2; ++t) {
    const FrequencySet out = resample(pair, ProbabilityMass{Eigen::Vector2d(0.75, 0.25)}, rng);
    ones += (out.vectors().array() == 1.0).count();
  }
  const double rate = static_cast<double>(ones) / draws;
  CHECK(rate >= 0.745);
  CHECK(rate <= 0.755);
}

TEST_CASE("batch sampling") {
  CounterRng rng(5);
  const Batch all = sample_batch(10, 10, rng);
  REQUIRE(all.size() == 10);
  for (Index i = 0; i < 10; ++i) CHECK(all.indices[i] == i);
  CHECK(rng.counter() == 0);
  CHECK_THROWS_AS(sample_batch(10, 10000, rng), PreconditionError);

  std::vector<int> hits(100, 0);
  const int reps = 10000;
  for (int t = 0; t < reps; ++t) {
    Batch b = sample_batch(100, 50, rng);
    std::sort(b.indices.begin(), b.indices.end());
    REQUIRE(std::adjacent_find(b.indices.begin(), b.indices.end()) == b.indices.end());
    for (Index i : b.indices) ++hits[i];
  }
  for (int h : hits) CHECK(std::abs(static_cast<double>(h) / reps - 0.5) <= 0.02);
}

TEST_CASE("acceptance ratio") {
  CHECK(acceptance_ratio(2.0, 2.0, 10.0) == 1.0);
  CHECK(acceptance_ratio(1.0, 2.0, 1.0) == 0.5);
  CHECK(acceptance_ratio(1.0, 0.0, 10.0) == std::numeric_limits<double>::infinity());
  CHECK(acceptance_ratio(0.0, 0.0, 10.0) == 0.0);
  CHECK(acceptance_ratio(2.0 * 7.3, 3.0 * 7.3, 10.0) == doctest::Approx(acceptance_ratio(2.0, 3.0, 10.0)).epsilon(1e-12));

  // (0.9)^64 ~ 1.18e-3 under the strict comparison ratio > u.
  CounterRng rng(6);
  const double r = acceptance_ratio(0.9, 1.0, 64.0);
  int accepted = 0;
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) accepted += r > uniform01(rng);
  const double expected = trials * std::pow(0.9, 64);
  CHECK(std::abs(accepted - expected) <= 4.0 * std::sqrt(expected));
}

TEST_CASE("metropolis sweep with zero step accepts everything and keeps frequencies") {
  const Dataset data = small_dataset(64, 1);
  CounterRng rng(2);
  Eigen::MatrixXd w(6, 2);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = standard_normal(rng);
  const FrequencySet f(w);
  const DesignMatrix s = assemble_design(f, data.inputs, ActivationKind::kComplexExp);
  const AmplitudeVector a = solve_regularized({s, data.outputs, 0.1, NormKind::kModulus});
  const Eigen::MatrixXd steps = Eigen::MatrixXd::Ones(6, 2);
  const MetropolisResult r =
      metropolis_sweep(f, a, data.inputs, data.outputs, steps, 0.0, 10.0, 0.1, ActivationKind::kComplexExp, rng);
  CHECK(r.accepted == 6);
  CHECK(r.frequencies == f);
}

TEST_CASE("train: no-op dynamics reproduce a single solve") {
  const Dataset data = small_dataset(80, 2);
  ArffConfig c = base_config(data.size());
  c.iterations = 1;
  c.step_stddev = 0.0;
  c.resample_rule = ResampleRule::constant(0.0);
  c.metropolis_rule = MetropolisRule::constant(false);
  CounterRng rng(3);
  Eigen::MatrixXd w(5, 2);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = standard_normal(rng);
  const FrequencySet f(w);
  const TrainTrace t = train(c, data, f);
  CHECK(t.frequencies == f);
  const AmplitudeVector direct =
      solve_regularized({assemble_design(f, data.inputs, ActivationKind::kComplexExp), data.outputs, 0.1});
  CHECK((t.amplitudes.values() - direct.values()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("train: solve counts, ESS bounds and record count per variant") {
  const Dataset data = small_dataset(120, 3);
  for (Variant v : {Variant::kAdaptiveMetropolis, Variant::kAdaptiveMetropolisResampling,
                    Variant::kRandomWalkResampling}) {
    ArffConfig c = base_config(data.size());
    c.iterations = 100;
    c.batch_size = 60;
    apply_variant(c, v);
    const Index k = 12;
    const TrainTrace t = train(c, data, FrequencySet::zeros(k, 2));
    REQUIRE(t.records.size() == 100u);
    for (const auto& r : t.records) {
      CAPTURE(to_string(v));
      CHECK(r.ess >= 1.0 - 1e-12);
      CHECK(r.ess <= k + 1e-9);
      if (v == Variant::kRandomWalkResampling) {
        CHECK(r.solves == 1);
        CHECK(r.resampled);
      } else if (v == Variant::kAdaptiveMetropolis) {
        CHECK(r.solves == 2);
        CHECK_FALSE(r.resampled);
      } else {
        CHECK(r.solves == (r.resampled ? 3 : 2));
      }
    }
  }
}

TEST_CASE("train: deterministic in the seed") {
  const Dataset data = small_dataset(100, 4);
  ArffConfig c = base_config(data.size());
  c.batch_size = 50;
  apply_variant(c, Variant::kAdaptiveMetropolisResampling);
  const TrainTrace a = train(c, data, FrequencySet::zeros(8, 2));
  const TrainTrace b = train(c, data, FrequencySet::zeros(8, 2));
  CHECK(a.frequencies == b.frequencies);
  CHECK(a.amplitudes.values() == b.amplitudes.values());
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].train_error == b.records[i].train_error);
    CHECK(a.records[i].ess == b.records[i].ess);
  }
  c.seed = 10;
  CHECK_FALSE(train(c, data, FrequencySet::zeros(8, 2)).frequencies == a.frequencies);
}

TEST_CASE("train: test data and observer") {
  const Dataset data = small_dataset(100, 5);
  const Dataset test = small_dataset(40, 6);
  ArffConfig c = base_config(data.size());
  c.iterations = 5;
  std::vector<Index> seen;
  const TrainTrace t =
      train(c, data, FrequencySet::zeros(6, 2), &test, [&](Index n, const FrequencySet&, const AmplitudeVector&) {
        seen.push_back(n);
      });
  CHECK(seen == std::vector<Index>{0, 1, 2, 3, 4, 5});
  for (const auto& r : t.records) CHECK(std::isfinite(r.test_mse));
  const Eigen::MatrixXcd p = predict(t.frequencies, t.amplitudes, test.inputs, ActivationKind::kComplexExp);
  const double mse = (p - test.outputs.cast<std::complex<double>>()).squaredNorm() / test.size();
  CHECK(t.records.back().test_mse == doctest::Approx(mse).epsilon(1e-10));
}

TEST_CASE("train: cosine features and RGB amplitudes") {
  Dataset data = small_dataset(90, 7);
  data.outputs = Eigen::MatrixXd(data.size(), 3);
  for (Index j = 0; j < data.size(); ++j)
    data.outputs.row(j) << std::sin(data.inputs(j, 0)), std::cos(data.inputs(j, 1)), data.inputs(j, 0);
  ArffConfig c = base_config(data.size());
  c.activation = ActivationKind::kCosineBias;
  c.norm_kind = NormKind::kTwoNorm;
  apply_variant(c, Variant::kRandomWalkResampling);
  const TrainTrace t = train(c, data, FrequencySet::zeros(10, 3));
  CHECK(t.amplitudes.channels() == 3);
  CHECK(t.amplitudes.values().imag().cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.records.back().train_mse < t.records.front().train_mse);
}

TEST_CASE("configuration checks") {
  ArffConfig c = base_config(50);
  CHECK_NOTHROW(c.validate(10, 50));
  CHECK_THROWS_AS(c.validate(50, 50), ConfigError);
  c.batch_size = 60;
  CHECK_THROWS_AS(c.validate(10, 50), ConfigError);
  c = base_config(50);
  c.lambda = 0.0;
  CHECK_THROWS_AS(c.validate(10, 50), ConfigError);
  c = base_config(50);
  c.gamma = 0.5;
  CHECK_THROWS_AS(c.validate(10, 50), ConfigError);
  c = base_config(50);
  c.resample_rule = ResampleRule::constant(1.5);
  CHECK_THROWS_AS(c.validate(10, 50), ConfigError);
  c = base_config(50);
  c.iterations = 0;
  CHECK_THROWS_AS(c.validate(10, 50), ConfigError);
  CHECK(parse_variant("RW-R") == Variant::kRandomWalkResampling);
  CHECK_THROWS_AS(parse_variant("XX"), ConfigError);
}

TEST_CASE("warm-up rules") {
  const ResampleRule r{0.5, 3, 1.0};
  CHECK(r(1) == 1.0);
  CHECK(r(3) == 1.0);
  CHECK(r(4) == 0.5);
  const MetropolisRule a{true, 2, false};
  CHECK_FALSE(a(2));
  CHECK(a(3));
}
