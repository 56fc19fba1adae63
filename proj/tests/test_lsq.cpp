#include "arff/errors.hpp"
#include "arff/lsq.hpp"
#include "arff/rng.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <numbers>

using namespace arff;

namespace {

Eigen::MatrixXd normal_matrix(Index rows, Index cols, CounterRng& rng, double scale = 1.0) {
  Eigen::MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = scale * standard_normal(rng);
  return m;
}

}  // namespace

TEST_CASE("regularized solve matches a dense elimination oracle") {
  CounterRng rng(1);
  for (int trial = 0; trial < 40; ++trial) {
    const Index k = 1 + static_cast<Index>(uniform_index(rng, 24));
    const Index m = k + 1 + static_cast<Index>(uniform_index(rng, 100));
    const double lambdas[] = {0.0, 1e-3, 0.1, 10.0};
    const double lambda = lambdas[trial % 4];
    const bool complex_exp = trial % 2 == 0;
    const Index d = 3;
    const auto kind = complex_exp ? ActivationKind::kComplexExp : ActivationKind::kCosineBias;
    const FrequencySet freqs(normal_matrix(k, complex_exp ? d : d + 1, rng, 1.5));
    const Eigen::MatrixXd x = normal_matrix(m, d, rng);
    const Eigen::MatrixXd y = normal_matrix(m, trial % 3 == 0 ? 3 : 1, rng);

    const DesignMatrix s = assemble_design(freqs, x, kind);
    SolveDiagnostics diag;
    const AmplitudeVector a =
        solve_regularized({s, y, lambda, y.cols() == 1 ? NormKind::kModulus : NormKind::kTwoNorm}, &diag);
    const auto ref = oracle::regularized_solve(oracle::design(freqs.vectors(), x, complex_exp), y, lambda);
    CAPTURE(trial);
    CHECK(oracle::relative_difference(a.values(), ref) < 1e-10);
    if (!complex_exp) CHECK(a.values().imag().cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("design matrix entries") {
  Eigen::MatrixXd w(2, 2);
  w << 1.0, 2.0, -0.5, 0.25;
  Eigen::MatrixXd x(1, 2);
  x << 0.3, -0.7;
  const DesignMatrix s = assemble_design(FrequencySet(w), x, ActivationKind::kComplexExp);
  CHECK(std::abs(s.complex_entries(0, 0) - std::polar(1.0, 0.3 - 1.4)) < 1e-15);
  CHECK(std::abs(s.complex_entries(0, 1) - std::polar(1.0, -0.15 - 0.175)) < 1e-15);
  Eigen::MatrixXd wb(1, 3);
  wb << 1.0, 2.0, 0.5;
  const DesignMatrix c = assemble_design(FrequencySet(wb), x, ActivationKind::kCosineBias);
  CHECK(c.real_entries(0, 0) == doctest::Approx(std::cos(0.3 - 1.4 + 0.5)).epsilon(1e-15));
}

TEST_CASE("residual metrics") {
  CounterRng rng(2);
  const Index k = 5, m = 40;
  const FrequencySet freqs(normal_matrix(k, 2, rng));
  const Eigen::MatrixXd x = normal_matrix(m, 2, rng), y = normal_matrix(m, 1, rng);
  const DesignMatrix s = assemble_design(freqs, x, ActivationKind::kComplexExp);
  const AmplitudeVector a = solve_regularized({s, y, 0.1, NormKind::kModulus});
  const Eigen::MatrixXcd& S = s.complex_entries;
  const Eigen::MatrixXcd yc = y.cast<std::complex<double>>();
  const Eigen::MatrixXcd r = S.adjoint() * S * a.values() - S.adjoint() * yc;
  CHECK(residual_metric(s, a, y) == doctest::Approx(r.squaredNorm() / m).epsilon(1e-10));
  CHECK(residual_metric(assemble_normal_equations(s, y), a) == doctest::Approx(r.squaredNorm() / m).epsilon(1e-10));
  CHECK(data_space_metric(s, a, y) == doctest::Approx((S * a.values() - yc).squaredNorm() / m).epsilon(1e-12));

  // With lambda = 0 the normal-equation residual vanishes.
  const AmplitudeVector exact = solve_regularized({s, y, 0.0, NormKind::kModulus});
  CHECK(residual_metric(s, exact, y) < 1e-16 * (S.adjoint() * yc).squaredNorm() + 1e-20);
}

TEST_CASE("singular gram: fallback at lambda 0, never needed at lambda > 0") {
  Eigen::MatrixXd w(3, 1);
  w << 0.5, -0.25, 1.0;
  // All points at the origin: every column of S is the ones vector.
  const Eigen::MatrixXd x = Eigen::MatrixXd::Zero(10, 1), y = Eigen::MatrixXd::Constant(10, 1, 2.0);
  const DesignMatrix s = assemble_design(FrequencySet(w), x, ActivationKind::kComplexExp);
  SolveDiagnostics diag;
  const AmplitudeVector a = solve_regularized({s, y, 0.0, NormKind::kModulus}, &diag);
  CHECK(diag.used_fallback);
  CHECK_FALSE(diag.warning.empty());
  CHECK(a.values().allFinite());
  // Minimum-norm solution spreads the value equally.
  CHECK((a.values().array() - 2.0 / 3.0).abs().maxCoeff() <= 1e-10);
  SolveDiagnostics reg;
  solve_regularized({s, y, 1e-3, NormKind::kModulus}, &reg);
  CHECK_FALSE(reg.used_fallback);
}

TEST_CASE("solver preconditions") {
  const DesignMatrix s = assemble_design(FrequencySet::zeros(2, 1), Eigen::MatrixXd::Zero(4, 1),
                                         ActivationKind::kComplexExp);
  const Eigen::MatrixXd y = Eigen::MatrixXd::Ones(4, 1), bad = Eigen::MatrixXd::Ones(3, 1);
  CHECK_THROWS_AS(solve_regularized({s, y, -1.0, NormKind::kModulus}), PreconditionError);
  CHECK_THROWS_AS(solve_regularized({s, bad, 0.1, NormKind::kModulus}), PreconditionError);
}

TEST_CASE("design matrix worked examples") {
  Eigen::MatrixXd x(3, 2);
  x << 0.1, 0.2, -1.0, 3.0, 5.0, -2.0;
  const DesignMatrix ones = assemble_design(FrequencySet::zeros(4, 2), x, ActivationKind::kComplexExp);
  CHECK(ones.complex_entries == Eigen::MatrixXcd::Ones(3, 4));
  Eigen::MatrixXd bias_only(1, 3);
  bias_only << 0.0, 0.0, std::numbers::pi;
  const DesignMatrix c = assemble_design(FrequencySet(bias_only), x, ActivationKind::kCosineBias);
  CHECK((c.real_entries.array() + 1.0).abs().maxCoeff() <= 1e-15);
  const DesignMatrix s = assemble_design(FrequencySet(Eigen::MatrixXd::Constant(1, 1, 2.0)),
                                         Eigen::MatrixXd::Constant(1, 1, 0.75), ActivationKind::kComplexExp);
  CHECK(s.complex_entries(0, 0).real() == doctest::Approx(std::cos(1.5)).epsilon(1e-15));
  CHECK(s.complex_entries(0, 0).imag() == doctest::Approx(std::sin(1.5)).epsilon(1e-15));
  CHECK_THROWS_AS(assemble_design(FrequencySet::zeros(2, 3), x, ActivationKind::kComplexExp), PreconditionError);
}

TEST_CASE("single zero frequency gives the mean") {
  Eigen::MatrixXd y(5, 1);
  y << 1, 2, 3, 4, 10;
  const DesignMatrix s = assemble_design(FrequencySet::zeros(1, 1), Eigen::MatrixXd::Zero(5, 1),
                                         ActivationKind::kComplexExp);
  const AmplitudeVector a = solve_regularized({s, y, 0.0, NormKind::kModulus});
  CHECK(std::abs(a.values()(0, 0) - 4.0) <= 1e-14);
  CHECK(residual_metric(s, AmplitudeVector(Eigen::MatrixXcd::Zero(1, 1), NormKind::kModulus),
                        Eigen::MatrixXd::Zero(5, 1)) == 0.0);
}

TEST_CASE("solver properties over random shapes") {
  CounterRng rng(3);
  const double lambdas[] = {0.0, 1e-3, 0.1, 10.0};
  for (int t = 0; t < 60; ++t) {
    const Index k = 1 + static_cast<Index>(uniform_index(rng, 64));
    const Index m = k + 1 + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(512 - k)));
    const FrequencySet f(normal_matrix(k, 4, rng));
    const Eigen::MatrixXd x = normal_matrix(m, 4, rng), y = normal_matrix(m, 3, rng);
    const DesignMatrix s = assemble_design(f, x, ActivationKind::kComplexExp);
    const NormalEquations ne = assemble_normal_equations(s, y);
    const Eigen::MatrixXcd g = ne.gram();
    CHECK((g - g.adjoint()).cwiseAbs().maxCoeff() <= 1e-12 * g.cwiseAbs().maxCoeff());

    const double lambda = lambdas[t % 4];
    SolveDiagnostics diag;
    const AmplitudeVector a = solve_regularized({s, y, lambda, NormKind::kTwoNorm}, &diag);
    Eigen::MatrixXcd shifted = g;
    shifted.diagonal().array() += lambda * m;
    CHECK((shifted * a.values() - ne.rhs()).norm() <= kSolveTolerance * ne.rhs().norm());

    for (Index ch = 0; ch < 3; ++ch) {
      const Eigen::MatrixXd yc = y.col(ch);
      const AmplitudeVector single = solve_regularized({s, yc, lambda, NormKind::kModulus});
      CHECK((single.values().col(0) - a.values().col(ch)).cwiseAbs().maxCoeff() <=
            1e-12 * std::max(1.0, a.values().col(ch).cwiseAbs().maxCoeff()));
    }

    const Eigen::MatrixXd y1 = y.col(0);
    double previous = INFINITY;
    for (double l : {1e-3, 0.1, 10.0, 1e6}) {
      const double n = solve_regularized({s, y1, l, NormKind::kModulus}).norm();
      CHECK(n <= previous * (1.0 + 1e-10));
      previous = n;
    }
    CHECK(solve_regularized({s, y1, 1e6, NormKind::kModulus}).norm() <
          1e-4 * solve_regularized({s, y1, 0.1, NormKind::kModulus}).norm());
  }
}
