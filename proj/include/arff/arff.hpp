#pragma once

#include "arff/lsq.hpp"
#include "arff/rng.hpp"
#include "arff/targets.hpp"
#include "arff/types.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace arff {

/// Normalized amplitude mass p_k = n_k / sum_j n_j.
struct ProbabilityMass {
  Eigen::VectorXd weights;
  bool degenerate = false;  // all amplitudes were zero; weights are uniform

  Index size() const noexcept { return weights.size(); }
};

ProbabilityMass probability_mass(const AmplitudeVector& a);

/// 1 / sum p_k^2, in [1, K].
double effective_sample_size(const ProbabilityMass& mass);

/// Multinomial resampling with replacement: each slot copies w_j, j ~ mass.
FrequencySet resample(const FrequencySet& freqs, const ProbabilityMass& mass, CounterRng& rng);

/// M_B distinct indices drawn uniformly without replacement.
struct Batch {
  std::vector<Index> indices;
  Index size() const noexcept { return static_cast<Index>(indices.size()); }
};

/// When batch_size == data size, returns 0..M-1 in order without consuming randomness.
Batch sample_batch(Index data_size, Index batch_size, CounterRng& rng);
Batch sample_batch(const Dataset& data, Index batch_size, CounterRng& rng);

/// Resampling threshold R(n): `value` from iteration `warmup + 1` on, and
/// `warmup_value` for iterations 1..warmup.
struct ResampleRule {
  double value = 0.0;
  Index warmup = 0;
  double warmup_value = 1.0;

  double operator()(Index iteration) const noexcept { return iteration <= warmup ? warmup_value : value; }
  static ResampleRule constant(double v) { return {v, 0, v}; }
};

/// Adaptive-Metropolis switch A(n), same warm-up shape as ResampleRule.
struct MetropolisRule {
  bool value = true;
  Index warmup = 0;
  bool warmup_value = true;

  bool operator()(Index iteration) const noexcept { return iteration <= warmup ? warmup_value : value; }
  static MetropolisRule constant(bool v) { return {v, 0, v}; }
};

struct ArffConfig {
  Index iterations = 100;     // N
  double step_stddev = 0.5;   // delta
  double gamma = 10.0;        // Metropolis exponent
  Index batch_size = 0;       // M_B; K < M_B <= M
  double lambda = 0.1;        // Tikhonov weight
  ResampleRule resample_rule = ResampleRule::constant(0.0);
  MetropolisRule metropolis_rule = MetropolisRule::constant(true);
  ActivationKind activation = ActivationKind::kComplexExp;
  NormKind norm_kind = NormKind::kModulus;
  std::uint64_t seed = 0;

  /// Throws ConfigError on any violated parameter constraint.
  void validate(Index nodes, Index data_size) const;
};

/// Named flow-control settings of the three compared variants.
enum class Variant { kAdaptiveMetropolis, kAdaptiveMetropolisResampling, kRandomWalkResampling };
std::string_view to_string(Variant v) noexcept;
Variant parse_variant(std::string_view text);
/// AM: (R, A) = (0, true); AM-R: (0.75, true); RW-R: (1, false).
void apply_variant(ArffConfig& config, Variant variant);

struct IterationRecord {
  Index iteration = 0;
  double train_error = 0.0;  // ||(S^H S) a - S^H y||^2 / M_B
  double train_mse = 0.0;    // ||S a - y||^2 / M_B
  double test_error = std::numeric_limits<double>::quiet_NaN();
  double test_mse = std::numeric_limits<double>::quiet_NaN();
  double ess = 0.0;
  bool resampled = false;
  bool degenerate_amplitudes = false;
  Index accepted = 0;
  Index solves = 0;
  double wall_seconds = 0.0;  // since the start of train()
};

struct TrainTrace {
  std::vector<IterationRecord> records;
  FrequencySet frequencies;
  AmplitudeVector amplitudes;
  Index fallback_solves = 0;
};

struct MetropolisResult {
  FrequencySet frequencies;
  AmplitudeVector proposal_amplitudes;
  Index accepted = 0;
};

/// One proposal/accept sweep. Proposes w' = w + delta * nu, solves for a' on
/// the batch, and accepts node k iff (n'_k / n_k)^gamma > u_k. A node with
/// n_k = 0 < n'_k is always accepted. `steps` holds nu (K x dim).
MetropolisResult metropolis_sweep(const FrequencySet& freqs, const AmplitudeVector& current,
                                  const Eigen::MatrixXd& batch_inputs, const Eigen::MatrixXd& batch_targets,
                                  const Eigen::MatrixXd& steps, double delta, double gamma, double lambda,
                                  ActivationKind kind, CounterRng& acceptance_rng);

/// The acceptance ratio (n'/n)^gamma with the zero-norm conventions above.
double acceptance_ratio(double proposal_norm, double current_norm, double gamma) noexcept;

/// Called with iteration 0 after the initial solve and with n after iteration n.
using IterationObserver = std::function<void(Index iteration, const FrequencySet&, const AmplitudeVector&)>;

/// Algorithm driver: initial batch and solve, then N iterations of
/// mass/ESS, optional resampling, Metropolis sweep or random walk, and the
/// end-of-iteration solve. `test_data` (optional) is evaluated after each
/// iteration. Deterministic in config.seed.
TrainTrace train(const ArffConfig& config, const Dataset& data, const FrequencySet& initial,
                 const Dataset* test_data = nullptr, const IterationObserver& observer = {});

/// Network output sum_k a_k phi_k(x) for each row of `points`.
Eigen::MatrixXcd predict(const FrequencySet& freqs, const AmplitudeVector& a, const Eigen::MatrixXd& points,
                         ActivationKind kind);

}  // namespace arff
