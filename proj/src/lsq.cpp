#include "arff/lsq.hpp"

#include "arff/detail/sincos.hpp"
#include "arff/errors.hpp"

#include <cmath>
#include <complex>
#include <string>

namespace arff {
namespace {

void check_dimensions(const FrequencySet& freqs, const Eigen::MatrixXd& points, ActivationKind kind) {
  const Index expected = kind == ActivationKind::kComplexExp ? points.cols() : points.cols() + 1;
  if (freqs.dimension() != expected) {
    throw PreconditionError("frequency dimension " + std::to_string(freqs.dimension()) + " does not match points (" +
                            std::to_string(expected) + " expected for " + std::string(to_string(kind)) + ")");
  }
}

template <typename Matrix>
Matrix hermitian_gram(const Matrix& s) {
  const Index k = s.cols();
  Matrix gram = Matrix::Zero(k, k);
  gram.template selfadjointView<Eigen::Lower>().rankUpdate(s.adjoint());
  Matrix full = gram.template selfadjointView<Eigen::Lower>();
  if constexpr (Eigen::NumTraits<typename Matrix::Scalar>::IsComplex) {
    for (Index i = 0; i < k; ++i) full(i, i) = full(i, i).real();
  }
  return full;
}

// Index of the first pivot that an unblocked Cholesky sweep finds non-positive.
template <typename Matrix>
long first_nonpositive_pivot(Matrix a) {
  const Index n = a.rows();
  for (Index j = 0; j < n; ++j) {
    double d = std::real(a(j, j));
    for (Index p = 0; p < j; ++p) d -= std::norm(a(j, p));
    if (!(d > 0.0)) return static_cast<long>(j);
    const double l = std::sqrt(d);
    a(j, j) = l;
    for (Index i = j + 1; i < n; ++i) {
      typename Matrix::Scalar v = a(i, j);
      for (Index p = 0; p < j; ++p) {
        if constexpr (Eigen::NumTraits<typename Matrix::Scalar>::IsComplex)
          v -= a(i, p) * std::conj(a(j, p));
        else
          v -= a(i, p) * a(j, p);
      }
      a(i, j) = v / l;
    }
  }
  return -1;
}

template <typename Matrix>
Matrix solve_shifted(const Matrix& gram, const Matrix& rhs, double shift, bool allow_fallback,
                     SolveDiagnostics* diagnostics) {
  Matrix system = gram;
  system.diagonal().array() += shift;

  const double rhs_norm = rhs.norm();
  auto relative_residual = [&](const Matrix& x) {
    const double r = (system * x - rhs).norm();
    return rhs_norm > 0.0 ? r / rhs_norm : r;
  };

  Matrix solution;
  Eigen::LLT<Matrix> llt(system);
  bool solved = llt.info() == Eigen::Success;
  if (solved) {
    solution = llt.solve(rhs);
    // Two refinement steps at most; only ill-conditioned systems need them.
    for (int step = 0; step < 2 && relative_residual(solution) > kSolveTolerance; ++step)
      solution += llt.solve(rhs - system * solution);
    // A numerically singular Gram can pass the factorization on a rounding-level pivot.
    if (allow_fallback && (!solution.allFinite() || relative_residual(solution) > kSolveTolerance)) solved = false;
  }
  if (!solved && allow_fallback) {
    const long pivot = first_nonpositive_pivot(system);
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(system);
    solution = cod.solve(rhs);
    if (diagnostics) {
      diagnostics->used_fallback = true;
      diagnostics->warning = (llt.info() == Eigen::Success ? std::string("Cholesky solve inaccurate")
                                                           : "Cholesky failed at pivot " + std::to_string(pivot)) +
                             " with lambda = 0; used pivoted least-squares solve";
    }
  } else if (!solved) {
    const long pivot = first_nonpositive_pivot(system);
    throw SingularSystemError("normal equations are not positive definite (pivot " + std::to_string(pivot) + ")",
                              pivot);
  }
  if (diagnostics) diagnostics->relative_residual = relative_residual(solution);
  return solution;
}

}  // namespace

Eigen::MatrixXcd DesignMatrix::apply(const Eigen::MatrixXcd& amplitudes) const {
  if (is_complex()) return complex_entries * amplitudes;
  Eigen::MatrixXcd out(real_entries.rows(), amplitudes.cols());
  out.real() = real_entries * amplitudes.real();
  out.imag() = real_entries * amplitudes.imag();
  return out;
}

DesignMatrix assemble_design(const FrequencySet& freqs, const Eigen::MatrixXd& points, ActivationKind kind) {
  check_dimensions(freqs, points, kind);
  const Index d = points.cols();
  const Eigen::MatrixXd& w = freqs.vectors();

  DesignMatrix design;
  design.kind = kind;
  const Index rows = points.rows();
  const Index k = w.rows();
  // Phases are formed column by column in a reused buffer; the trig loops
  // below vectorize.
  Eigen::VectorXd phase(rows);
  auto fill_phase = [&](Index node) {
    phase = points.col(0) * w(node, 0);
    for (Index i = 1; i < d; ++i) phase += points.col(i) * w(node, i);
    if (kind == ActivationKind::kCosineBias) phase.array() += w(node, d);
  };
  if (kind == ActivationKind::kComplexExp) {
    design.complex_entries.resize(rows, k);
    for (Index node = 0; node < k; ++node) {
      fill_phase(node);
      std::complex<double>* out = design.complex_entries.col(node).data();
      for (Index j = 0; j < rows; ++j) {
        double sn, cs;
        detail::sincos(phase(j), sn, cs);
        out[j] = {cs, sn};
      }
    }
  } else {
    design.real_entries.resize(rows, k);
    for (Index node = 0; node < k; ++node) {
      fill_phase(node);
      double* out = design.real_entries.col(node).data();
      for (Index j = 0; j < rows; ++j) {
        double sn;
        detail::sincos(phase(j), sn, out[j]);
      }
    }
  }
  return design;
}

Eigen::MatrixXcd NormalEquations::gram() const {
  return is_complex ? gram_complex : Eigen::MatrixXcd(gram_real.cast<std::complex<double>>());
}

Eigen::MatrixXcd NormalEquations::rhs() const {
  return is_complex ? rhs_complex : Eigen::MatrixXcd(rhs_real.cast<std::complex<double>>());
}

NormalEquations assemble_normal_equations(const DesignMatrix& design, const Eigen::MatrixXd& targets) {
  if (targets.rows() != design.rows())
    throw PreconditionError("target rows (" + std::to_string(targets.rows()) + ") differ from design rows (" +
                            std::to_string(design.rows()) + ")");
  NormalEquations normal;
  normal.rows = design.rows();
  normal.is_complex = design.is_complex();
  if (design.is_complex()) {
    normal.gram_complex = hermitian_gram(design.complex_entries);
    normal.rhs_complex = design.complex_entries.adjoint() * targets.cast<std::complex<double>>();
  } else {
    normal.gram_real = hermitian_gram(design.real_entries);
    normal.rhs_real = design.real_entries.transpose() * targets;
  }
  return normal;
}

AmplitudeVector solve_normal_equations(const NormalEquations& normal, double lambda, NormKind norm_kind,
                                       SolveDiagnostics* diagnostics) {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw PreconditionError("lambda must be finite and >= 0");
  const double shift = lambda * static_cast<double>(normal.rows);
  const bool allow_fallback = lambda == 0.0;
  if (normal.is_complex) {
    return AmplitudeVector(solve_shifted(normal.gram_complex, normal.rhs_complex, shift, allow_fallback, diagnostics),
                           norm_kind);
  }
  const Eigen::MatrixXd real = solve_shifted(normal.gram_real, normal.rhs_real, shift, allow_fallback, diagnostics);
  return AmplitudeVector(real.cast<std::complex<double>>(), norm_kind);
}

AmplitudeVector solve_regularized(const LsqProblem& problem, SolveDiagnostics* diagnostics) {
  return solve_normal_equations(assemble_normal_equations(problem.design, problem.targets), problem.lambda,
                                problem.norm_kind, diagnostics);
}

double residual_metric(const NormalEquations& normal, const AmplitudeVector& a) {
  if (a.count() != normal.size() || a.channels() != normal.channels())
    throw PreconditionError("amplitude shape does not match normal equations");
  if (normal.rows == 0) throw PreconditionError("residual metric needs at least one data row");
  double sq;
  if (normal.is_complex) {
    sq = (normal.gram_complex * a.values() - normal.rhs_complex).squaredNorm();
  } else {
    const Eigen::MatrixXd re = normal.gram_real * a.values().real() - normal.rhs_real;
    const Eigen::MatrixXd im = normal.gram_real * a.values().imag();
    sq = re.squaredNorm() + im.squaredNorm();
  }
  return sq / static_cast<double>(normal.rows);
}

double residual_metric(const DesignMatrix& design, const AmplitudeVector& a, const Eigen::MatrixXd& targets) {
  return residual_metric(assemble_normal_equations(design, targets), a);
}

double data_space_metric(const DesignMatrix& design, const AmplitudeVector& a, const Eigen::MatrixXd& targets) {
  if (targets.rows() != design.rows() || a.count() != design.cols() || a.channels() != targets.cols())
    throw PreconditionError("data-space metric shape mismatch");
  if (design.rows() == 0) throw PreconditionError("data-space metric needs at least one data row");
  Eigen::MatrixXcd residual = design.apply(a.values());
  residual.real() -= targets;
  return residual.squaredNorm() / static_cast<double>(design.rows());
}

}  // namespace arff
