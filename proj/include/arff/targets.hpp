#pragma once

#include "arff/rng.hpp"
#include "arff/types.hpp"

#include <string>
#include <vector>

namespace arff {

/// Sine integral Si(x) = int_0^x sin(t)/t dt, absolute error below 1e-10.
double sine_integral(double x) noexcept;

/// Regularized discontinuity f(x) = Si([B^T x]_1 / alpha) exp(-|B^T x|^2 / 2).
class TargetSpec {
 public:
  /// Orthogonality of `rotation` is checked to `orthogonality_tolerance`
  /// entrywise; use 1e-4 for matrices printed to four decimals.
  TargetSpec(Eigen::MatrixXd rotation, double alpha, double orthogonality_tolerance = 1e-10);

  /// B = I in dimension d.
  static TargetSpec identity(Index dimension, double alpha);
  /// The 4x4 rotation used by the stand-alone regression experiments.
  static TargetSpec published_rotation(double alpha = 0.01);

  Index dimension() const noexcept { return rotation_.rows(); }
  double alpha() const noexcept { return alpha_; }
  const Eigen::MatrixXd& rotation() const noexcept { return rotation_; }

  /// B^{-1} x computed as B^T x.
  Eigen::VectorXd rotate_inverse(const Eigen::Ref<const Eigen::VectorXd>& x) const;

 private:
  Eigen::MatrixXd rotation_;
  double alpha_;
};

double target_f(const Eigen::Ref<const Eigen::VectorXd>& x, const TargetSpec& spec);
/// Unrotated form (B omitted).
double target_f(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha);

struct NormalizationStats {
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_std;
  Eigen::VectorXd output_mean;
  Eigen::VectorXd output_std;
};

enum class Provenance { kSyntheticSineIntegral, kImage, kExternal };
std::string_view to_string(Provenance p) noexcept;
Provenance parse_provenance(std::string_view text);

/// Inputs one point per row (M x d); outputs M x C.
struct Dataset {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd outputs;
  NormalizationStats stats;  // identity (mean 0, std 1) until normalized
  Provenance provenance = Provenance::kExternal;

  Index size() const noexcept { return inputs.rows(); }
  Index input_dimension() const noexcept { return inputs.cols(); }
  Index output_channels() const noexcept { return outputs.cols(); }

  /// Throws PreconditionError unless inputs/outputs are consistent and M >= 1.
  void validate() const;
  /// Stats equal to the identity transform for this shape.
  static NormalizationStats identity_stats(Index d, Index channels);
};

/// M i.i.d. N(0, I) inputs with exact target evaluations.
Dataset generate_dataset(Index count, const TargetSpec& spec, std::uint64_t seed);
Dataset generate_dataset(Index count, const TargetSpec& spec, CounterRng rng);

/// Componentwise (x - mean) / std for inputs and outputs (sample std, M - 1).
/// Returns the normalized data (whose `stats` record the transform) and the stats.
std::pair<Dataset, NormalizationStats> normalize(const Dataset& data);
/// Applies previously computed stats, e.g. training stats to a test set.
Dataset apply_normalization(const Dataset& data, const NormalizationStats& stats);
Dataset denormalize(const Dataset& data, const NormalizationStats& stats);

struct FourierNormResult {
  double l1_norm;             // ||f_hat||_{L1(R^d)}
  double one_dimensional;     // ||g_hat||_{L1(R)} for the Si factor
  double achieved_tolerance;  // relative change at the last refinement
  int levels;
};

/// ||f_hat||_{L1} by 1-D Fourier quadrature of the Si factor, refined by grid
/// halving until successive levels agree to `tolerance` (relative).
FourierNormResult fourier_l1_norm(const TargetSpec& spec, double tolerance = 1e-3, int max_levels = 7);

/// |g_hat(w)| for the Si factor g(t) = Si(t/alpha) exp(-t^2/2), by the same
/// quadrature as fourier_l1_norm (`refinement` grid halvings past level 0).
class SiFactorTransform {
 public:
  explicit SiFactorTransform(double alpha, int refinement = 3);
  double alpha() const noexcept { return alpha_; }
  double modulus(double omega) const;

 private:
  double alpha_;
  double step_;
  std::vector<double> weighted_;
};

/// Marginal of the optimal density |f_hat| / ||f_hat||_L1 along [B^{-1} w]_j
/// (0-based `axis`): |g_hat| / ||g_hat||_L1 for axis 0, N(0, 1) otherwise.
double optimal_marginal_density(double omega, Index axis, double alpha, double si_factor_l1_norm,
                                const SiFactorTransform* transform = nullptr);

/// (1 + lambda) / ((2 pi)^d K) ||f_hat||_{L1}^2.
double error_bound_constant(const TargetSpec& spec, Index nodes, double lambda);
double error_bound_from_norm(double l1_norm, Index dimension, Index nodes, double lambda);

}  // namespace arff
