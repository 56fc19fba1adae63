#include "arff/errors.hpp"
#include "arff/targets.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <doctest.h>

#include <cmath>
#include <iomanip>
#include <numbers>

using namespace arff;
using boost::math::quadrature::gauss_kronrod;

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kFrozenSiFactorNorm = 13.1356;

// Si(x) by Gauss-Kronrod over pieces of length pi.
double si_quadrature(double x) {
  const double sign = x < 0 ? -1.0 : 1.0;
  x = std::abs(x);
  auto f = [](double t) { return t == 0.0 ? 1.0 : std::sin(t) / t; };
  double total = 0.0;
  for (double a = 0.0; a < x; a += kPi) total += gauss_kronrod<double, 31>::integrate(f, a, std::min(a + kPi, x), 5, 1e-15);
  return sign * total;
}

// |g_hat(w)| for g(t) = Si(t/alpha) exp(-t^2/2), unitary convention, from the
// convolution of the transforms of Si(./alpha) and the Gaussian:
//   g_hat(w) = (-i/2) PV int_{-1/alpha}^{1/alpha} exp(-(w - s)^2/2) / s ds.
double g_hat_modulus(double w, double alpha) {
  auto f = [w](double s) {
    if (s == 0.0) return 2.0 * w * std::exp(-0.5 * w * w);
    return (std::exp(-0.5 * (w - s) * (w - s)) - std::exp(-0.5 * (w + s) * (w + s))) / s;
  };
  const double upper = 1.0 / alpha;
  double total = 0.0;
  for (double a = 0.0; a < upper; a += 1.0)
    total += gauss_kronrod<double, 31>::integrate(f, a, std::min(a + 1.0, upper), 3, 1e-13);
  return 0.5 * std::abs(total);
}

double g_hat_l1(double alpha) {
  const double end = 1.0 / alpha + 12.0;
  auto f = [alpha](double w) { return g_hat_modulus(w, alpha); };
  double total = 0.0;
  for (double a = 0.0; a < end; a += 1.0) total += gauss_kronrod<double, 15>::integrate(f, a, a + 1.0, 0);
  return 2.0 * total;
}

}  // namespace

TEST_CASE("sine integral") {
  CHECK(sine_integral(0.0) == 0.0);
  CHECK(std::abs(sine_integral(1.0) - 0.946083070367183) < 1e-12);
  CHECK(std::abs(sine_integral(1.0) - si_quadrature(1.0)) < 1e-12);
  CHECK(std::abs(sine_integral(100.0) - si_quadrature(100.0)) < 1e-10);
  CHECK(std::abs(sine_integral(1e3) - kPi / 2) <= 1e-3);
  CounterRng rng(1);
  for (int i = 0; i < 200; ++i) {
    const double x = std::pow(10.0, 5.0 * uniform01(rng) - 2.0) * (i % 2 ? -1.0 : 1.0);
    CAPTURE(x);
    CHECK(sine_integral(-x) == -sine_integral(x));
    if (std::abs(x) < 300.0) CHECK(std::abs(sine_integral(x) - si_quadrature(x)) < 1e-10);
  }
  double prev = 0.0;
  for (int i = 1; i <= 1000; ++i) {
    const double v = sine_integral(kPi * i / 1000.0);
    REQUIRE(v > prev);
    prev = v;
  }
}

TEST_CASE("target function") {
  const TargetSpec id = TargetSpec::identity(4, 0.01);
  const Eigen::Vector4d e1(1, 0, 0, 0);
  CHECK(target_f(e1, id) == doctest::Approx(si_quadrature(100.0) * std::exp(-0.5)).epsilon(1e-10));
  CHECK(target_f(Eigen::Vector4d::Zero(), id) == 0.0);

  const TargetSpec b = TargetSpec::published_rotation(0.01);
  CounterRng rng(2);
  for (int i = 0; i < 100; ++i) {
    Eigen::Vector4d x;
    for (Index k = 0; k < 4; ++k) x(k) = 3.0 * standard_normal(rng);
    CHECK(target_f(x, id) == target_f(x, 0.01));
    CHECK(std::abs(b.rotate_inverse(x).norm() - x.norm()) <= 1e-10 * std::max(1.0, x.norm()));
    const Eigen::Vector4d far = 10.0 * x.normalized();
    CHECK(std::abs(target_f(far, b)) <= si_quadrature(kPi) * std::exp(-50.0));
  }
}

TEST_CASE("rotation matrix") {
  const TargetSpec b = TargetSpec::published_rotation();
  const Eigen::MatrixXd& m = b.rotation();
  CHECK((m.transpose() * m - Eigen::MatrixXd::Identity(4, 4)).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(m(0, 0) == doctest::Approx(0.8617).epsilon(1e-4));
  CHECK(m(0, 1) == doctest::Approx(0.4975).epsilon(1e-4));
  CHECK(m(0, 2) == doctest::Approx(-0.0998).epsilon(1e-3));
  CHECK(std::abs(m(0, 3)) <= 5e-5);
  Eigen::MatrixXd skew = Eigen::MatrixXd::Identity(2, 2);
  skew(0, 1) = 0.1;
  CHECK_THROWS_AS(TargetSpec(skew, 0.01), PreconditionError);
  CHECK_THROWS_AS(TargetSpec::identity(2, 0.0), PreconditionError);
}

TEST_CASE("dataset generation and normalization") {
  const TargetSpec spec = TargetSpec::published_rotation();
  const Dataset d = generate_dataset(100000, spec, 3);
  for (Index k = 0; k < 4; ++k) CHECK(std::abs(d.inputs.col(k).mean()) <= 0.013);
  const Dataset again = generate_dataset(100000, spec, 3);
  CHECK(d.inputs == again.inputs);
  CHECK(d.outputs == again.outputs);
  CHECK(d.outputs(7, 0) == target_f(d.inputs.row(7).transpose(), spec));

  const auto [n, stats] = normalize(generate_dataset(500, spec, 4));
  for (Index k = 0; k < 4; ++k) {
    const Eigen::VectorXd c = n.inputs.col(k);
    const double mean = c.mean();
    const double sd = std::sqrt((c.array() - mean).square().sum() / (c.size() - 1));
    CHECK(std::abs(mean) <= 1e-10);
    CHECK(std::abs(sd - 1.0) <= 1e-10);
  }
  CHECK(std::abs(n.outputs.mean()) <= 1e-10);
  const Dataset raw = generate_dataset(500, spec, 4);
  const Dataset back = denormalize(n, stats);
  CHECK((back.inputs - raw.inputs).cwiseAbs().maxCoeff() <= 1e-12 * raw.inputs.cwiseAbs().maxCoeff());
  CHECK((back.outputs - raw.outputs).cwiseAbs().maxCoeff() <= 1e-12 * raw.outputs.cwiseAbs().maxCoeff());
  const Dataset twice = normalize(n).first;
  CHECK((twice.inputs - n.inputs).cwiseAbs().maxCoeff() <= 1e-12);

  Dataset flat = raw;
  flat.outputs.setConstant(2.0);
  CHECK_THROWS_AS(normalize(flat), DegenerateDataError);
  Dataset one = raw;
  one.inputs = one.inputs.topRows(1).eval();
  one.outputs = one.outputs.topRows(1).eval();
  CHECK_THROWS_AS(normalize(one), PreconditionError);
}

TEST_CASE("Fourier L1 norm against the convolution oracle") {
  const double alpha = 0.01;
  const FourierNormResult r = fourier_l1_norm(TargetSpec::published_rotation(alpha));
  CHECK(r.achieved_tolerance <= 1e-3);
  const double oracle = g_hat_l1(alpha);
  MESSAGE("oracle ||g_hat||_L1 = " << oracle << ", quadrature = " << r.one_dimensional);
  CHECK(std::abs(r.one_dimensional - oracle) <= 2e-3 * oracle);
  CHECK(r.l1_norm == doctest::Approx(r.one_dimensional * std::pow(2.0 * kPi, 1.5)).epsilon(1e-14));
  // Frozen value of the oracle above.
  CHECK(oracle == doctest::Approx(kFrozenSiFactorNorm).epsilon(1e-6));

  const SiFactorTransform transform(alpha);
  for (double w : {0.5, 3.0, 40.0, 99.0, 101.0, 104.0})
    CHECK(std::abs(transform.modulus(w) - g_hat_modulus(w, alpha)) <= 2e-3 * g_hat_modulus(0.5, alpha) + 1e-3 * g_hat_modulus(w, alpha));
  CHECK(optimal_marginal_density(0.3, 1, alpha, r.one_dimensional) ==
        doctest::Approx(std::exp(-0.045) / std::sqrt(2.0 * kPi)).epsilon(1e-14));
}

TEST_CASE("error bound constant") {
  const TargetSpec spec = TargetSpec::published_rotation();
  const double b16 = error_bound_constant(spec, 16, 0.0);
  CHECK(b16 > 0.0);
  CHECK(std::isfinite(b16));
  CHECK(error_bound_constant(spec, 32, 0.0) == doctest::Approx(b16 / 2).epsilon(1e-15));
  CHECK(error_bound_constant(spec, 16, 1.0) == doctest::Approx(2 * b16).epsilon(1e-15));
  const double norm = fourier_l1_norm(spec).l1_norm;
  CHECK(b16 == doctest::Approx(norm * norm / (std::pow(2 * kPi, 4) * 16)).epsilon(1e-14));
  CHECK(error_bound_from_norm(2.0, 1, 4, 0.5) == doctest::Approx(1.5 * 4.0 / (2 * kPi * 4)).epsilon(1e-15));
}
