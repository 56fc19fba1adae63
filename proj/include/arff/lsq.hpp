#pragma once

#include "arff/types.hpp"

#include <string>

namespace arff {

/// Feature evaluations for a batch: rows are points, columns are nodes.
/// Exactly one of complex_entries / real_entries is populated, per kind.
struct DesignMatrix {
  ActivationKind kind = ActivationKind::kComplexExp;
  Eigen::MatrixXcd complex_entries;
  Eigen::MatrixXd real_entries;

  Index rows() const noexcept { return is_complex() ? complex_entries.rows() : real_entries.rows(); }
  Index cols() const noexcept { return is_complex() ? complex_entries.cols() : real_entries.cols(); }
  bool is_complex() const noexcept { return kind == ActivationKind::kComplexExp; }

  /// S * a, always complex (imaginary part is zero for cosine features).
  Eigen::MatrixXcd apply(const Eigen::MatrixXcd& amplitudes) const;
};

/// Builds S with S(j,k) = exp(i w_k.x_j) or cos(w_k.[x_j; 1]). `points` holds
/// one point per row, in the un-extended dimension d.
DesignMatrix assemble_design(const FrequencySet& freqs, const Eigen::MatrixXd& points, ActivationKind kind);

/// Unregularized normal equations S^H S, S^H y for one design and target set.
/// Stored real when the design is real.
struct NormalEquations {
  bool is_complex = true;
  Eigen::MatrixXcd gram_complex;
  Eigen::MatrixXcd rhs_complex;
  Eigen::MatrixXd gram_real;
  Eigen::MatrixXd rhs_real;
  Index rows = 0;  // number of data rows behind the sums

  Index size() const noexcept { return is_complex ? gram_complex.rows() : gram_real.rows(); }
  Index channels() const noexcept { return is_complex ? rhs_complex.cols() : rhs_real.cols(); }
  Eigen::MatrixXcd gram() const;
  Eigen::MatrixXcd rhs() const;
};

NormalEquations assemble_normal_equations(const DesignMatrix& design, const Eigen::MatrixXd& targets);

struct LsqProblem {
  const DesignMatrix& design;
  const Eigen::MatrixXd& targets;  // rows x channels
  double lambda = 0.0;
  NormKind norm_kind = NormKind::kModulus;
};

/// Set when the solver had to leave the Cholesky path.
struct SolveDiagnostics {
  bool used_fallback = false;
  std::string warning;
  double relative_residual = 0.0;
};

/// Relative tolerance on ||(G + lambda M_B I) a - S^H y|| / ||S^H y||.
inline constexpr double kSolveTolerance = 1e-8;

/// Solves (S^H S + lambda M_B I) a = S^H y; all channels share one factorization.
AmplitudeVector solve_regularized(const LsqProblem& problem, SolveDiagnostics* diagnostics = nullptr);

AmplitudeVector solve_normal_equations(const NormalEquations& normal, double lambda, NormKind norm_kind,
                                       SolveDiagnostics* diagnostics = nullptr);

/// ||(S^H S) a - S^H y||^2 / rows: the residual of the unregularized normal equations.
double residual_metric(const DesignMatrix& design, const AmplitudeVector& a, const Eigen::MatrixXd& targets);
double residual_metric(const NormalEquations& normal, const AmplitudeVector& a);

/// ||S a - y||^2 / rows, the data-space companion of residual_metric.
double data_space_metric(const DesignMatrix& design, const AmplitudeVector& a, const Eigen::MatrixXd& targets);

}  // namespace arff
