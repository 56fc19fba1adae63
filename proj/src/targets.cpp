#include "arff/targets.hpp"

#include "arff/errors.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <vector>

namespace arff {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kSiFactorSupport = 12.0;

// Power series, used where the terms stay small enough that cancellation
// costs no more than a few ulps.
double sine_integral_series(double x) {
  const double x2 = x * x;
  double term = x;  // x^(2n+1) / (2n+1)!
  double sum = x;
  for (int n = 1; n < 40; ++n) {
    term *= -x2 / static_cast<double>((2 * n) * (2 * n + 1));
    const double contribution = term / static_cast<double>(2 * n + 1);
    sum += contribution;
    if (std::abs(contribution) < 1e-18 * std::abs(sum)) break;
  }
  return sum;
}

// Si(x) = pi/2 + Im(e^{-ix} h) where h is the continued fraction for
// e^{ix} E1(ix), evaluated by the modified Lentz method. Converges quickly for x > 2.
double sine_integral_continued_fraction(double x) {
  constexpr double kTiny = 1e-300;
  constexpr double kEps = 1e-16;
  std::complex<double> b(1.0, x);
  std::complex<double> c(1.0 / kTiny, 0.0);
  std::complex<double> d = 1.0 / b;
  std::complex<double> h = d;
  for (int i = 1; i < 100000; ++i) {
    const double a = -static_cast<double>(i) * static_cast<double>(i);
    b += 2.0;
    d = 1.0 / (a * d + b);
    c = b + a / c;
    const std::complex<double> del = c * d;
    h *= del;
    if (std::abs(del.real() - 1.0) + std::abs(del.imag()) < kEps) break;
  }
  h *= std::complex<double>(std::cos(x), -std::sin(x));
  return kPi / 2.0 + h.imag();
}

}  // namespace

double sine_integral(double x) noexcept {
  if (std::isnan(x)) return x;
  const double ax = std::abs(x);
  double value;
  if (ax <= 4.0) {
    value = sine_integral_series(ax);
  } else if (std::isinf(ax)) {
    value = kPi / 2.0;
  } else {
    value = sine_integral_continued_fraction(ax);
  }
  return x < 0.0 ? -value : value;
}

TargetSpec::TargetSpec(Eigen::MatrixXd rotation, double alpha, double orthogonality_tolerance)
    : rotation_(std::move(rotation)), alpha_(alpha) {
  if (rotation_.rows() < 1 || rotation_.rows() != rotation_.cols())
    throw PreconditionError("rotation matrix must be square and nonempty");
  if (!(alpha_ > 0.0) || !std::isfinite(alpha_)) throw PreconditionError("alpha must be positive");
  const Eigen::MatrixXd defect =
      rotation_.transpose() * rotation_ - Eigen::MatrixXd::Identity(rotation_.rows(), rotation_.cols());
  if (defect.cwiseAbs().maxCoeff() > orthogonality_tolerance)
    throw PreconditionError("rotation matrix is not orthogonal within tolerance");
}

TargetSpec TargetSpec::identity(Index dimension, double alpha) {
  return TargetSpec(Eigen::MatrixXd::Identity(dimension, dimension), alpha);
}

TargetSpec TargetSpec::published_rotation(double alpha) {
  Eigen::MatrixXd b(4, 4);
  b << 0.8617, 0.4975, -0.0998, -0.0000,  //
      0.3028, -0.5246, -0.0000, 0.7957,   //
      0.0865, 0.0499, 0.9950, 0.0000,     //
      0.3978, -0.6891, -0.0000, -0.6057;
  TargetSpec printed(b, alpha, 1e-4);
  // Nearest orthogonal matrix (polar factor) of the four-decimal entries.
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return TargetSpec(svd.matrixU() * svd.matrixV().transpose(), printed.alpha());
}

Eigen::VectorXd TargetSpec::rotate_inverse(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dimension()) throw PreconditionError("point dimension does not match target dimension");
  return rotation_.transpose() * x;
}

double target_f(const Eigen::Ref<const Eigen::VectorXd>& x, const TargetSpec& spec) {
  const Eigen::VectorXd y = spec.rotate_inverse(x);
  return sine_integral(y(0) / spec.alpha()) * std::exp(-y.squaredNorm() / 2.0);
}

double target_f(const Eigen::Ref<const Eigen::VectorXd>& x, double alpha) {
  if (x.size() < 1) throw PreconditionError("empty point");
  return sine_integral(x(0) / alpha) * std::exp(-x.squaredNorm() / 2.0);
}

std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::kSyntheticSineIntegral:
      return "synthetic-sine-integral";
    case Provenance::kImage:
      return "image";
    case Provenance::kExternal:
      return "external";
  }
  return "external";
}

Provenance parse_provenance(std::string_view text) {
  if (text == "synthetic-sine-integral") return Provenance::kSyntheticSineIntegral;
  if (text == "image") return Provenance::kImage;
  if (text == "external") return Provenance::kExternal;
  throw ConfigError("unknown provenance '" + std::string(text) + "'");
}

void Dataset::validate() const {
  if (inputs.rows() < 1) throw PreconditionError("dataset is empty");
  if (inputs.rows() != outputs.rows()) throw PreconditionError("inputs and outputs differ in length");
  if (outputs.cols() < 1) throw PreconditionError("dataset has no output channel");
}

NormalizationStats Dataset::identity_stats(Index d, Index channels) {
  return {Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d), Eigen::VectorXd::Zero(channels),
          Eigen::VectorXd::Ones(channels)};
}

Dataset generate_dataset(Index count, const TargetSpec& spec, CounterRng rng) {
  if (count < 1) throw PreconditionError("dataset size must be >= 1");
  const Index d = spec.dimension();
  Dataset data;
  data.provenance = Provenance::kSyntheticSineIntegral;
  data.inputs.resize(count, d);
  data.outputs.resize(count, 1);
  Eigen::VectorXd x(d);
  for (Index m = 0; m < count; ++m) {
    fill_standard_normal(rng, std::span<double>(x.data(), static_cast<std::size_t>(d)));
    data.inputs.row(m) = x.transpose();
    data.outputs(m, 0) = target_f(x, spec);
  }
  data.stats = Dataset::identity_stats(d, 1);
  return data;
}

Dataset generate_dataset(Index count, const TargetSpec& spec, std::uint64_t seed) {
  return generate_dataset(count, spec, stream(CounterRng(seed), StreamPurpose::kData));
}

std::pair<Dataset, NormalizationStats> normalize(const Dataset& data) {
  data.validate();
  const Index m = data.size();
  if (m < 2) throw PreconditionError("normalization needs at least two points");

  auto column_stats = [m](const Eigen::MatrixXd& values, const std::string& prefix, Eigen::VectorXd& mean,
                          Eigen::VectorXd& sd) {
    mean = values.colwise().mean().transpose();
    sd.resize(values.cols());
    for (Index c = 0; c < values.cols(); ++c) {
      const double ss = (values.col(c).array() - mean(c)).square().sum();
      sd(c) = std::sqrt(ss / static_cast<double>(m - 1));
      if (!(sd(c) > 0.0))
        throw DegenerateDataError("zero variance in component " + prefix + std::to_string(c + 1),
                                  prefix + std::to_string(c + 1));
    }
  };

  NormalizationStats stats;
  column_stats(data.inputs, "x", stats.input_mean, stats.input_std);
  column_stats(data.outputs, "y", stats.output_mean, stats.output_std);
  return {apply_normalization(data, stats), stats};
}

Dataset apply_normalization(const Dataset& data, const NormalizationStats& stats) {
  data.validate();
  if (stats.input_mean.size() != data.input_dimension() || stats.output_mean.size() != data.output_channels())
    throw PreconditionError("normalization stats do not match dataset shape");
  Dataset out;
  out.provenance = data.provenance;
  out.inputs = ((data.inputs.rowwise() - stats.input_mean.transpose()).array().rowwise() /
                stats.input_std.transpose().array())
                   .matrix();
  out.outputs = ((data.outputs.rowwise() - stats.output_mean.transpose()).array().rowwise() /
                 stats.output_std.transpose().array())
                    .matrix();
  out.stats = stats;
  return out;
}

Dataset denormalize(const Dataset& data, const NormalizationStats& stats) {
  data.validate();
  Dataset out;
  out.provenance = data.provenance;
  out.inputs =
      ((data.inputs.array().rowwise() * stats.input_std.transpose().array()).rowwise() +
       stats.input_mean.transpose().array())
          .matrix();
  out.outputs =
      ((data.outputs.array().rowwise() * stats.output_std.transpose().array()).rowwise() +
       stats.output_mean.transpose().array())
          .matrix();
  out.stats = Dataset::identity_stats(data.input_dimension(), data.output_channels());
  return out;
}

namespace {

// Simpson-weighted samples of g(t) = Si(t/alpha) exp(-t^2/2) on [0, 12]
// (exp(-72) is below double resolution of g).
std::vector<double> weighted_si_factor(double alpha, Index t_intervals) {
  const double ht = kSiFactorSupport / static_cast<double>(t_intervals);
  std::vector<double> weighted_g(static_cast<std::size_t>(t_intervals + 1));
  for (Index j = 0; j <= t_intervals; ++j) {
    const double t = ht * static_cast<double>(j);
    const double simpson = (j == 0 || j == t_intervals) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
    weighted_g[static_cast<std::size_t>(j)] = simpson * sine_integral(t / alpha) * std::exp(-t * t / 2.0);
  }
  return weighted_g;
}

// |g_hat(w)| = sqrt(2/pi) |int_0^inf g(t) sin(w t) dt| (g is odd).
double si_factor_transform_at(const std::vector<double>& weighted_g, double w, double ht) {
  constexpr std::size_t kReanchor = 512;
  const std::complex<double> step(std::cos(w * ht), std::sin(w * ht));
  std::complex<double> phase(1.0, 0.0);
  double inner = 0.0;
  for (std::size_t j = 0; j < weighted_g.size(); ++j) {
    if (j % kReanchor == 0) {
      const double arg = w * ht * static_cast<double>(j);
      phase = {std::cos(arg), std::sin(arg)};
    }
    inner += weighted_g[j] * phase.imag();
    phase *= step;
  }
  return std::sqrt(2.0 / kPi) * std::abs(inner * ht / 3.0);
}

Index base_t_intervals(double alpha) {
  const double w_max = 1.0 / alpha + 12.0;
  return 2 * static_cast<Index>(std::ceil(kSiFactorSupport / std::min(alpha / 2.0, 1.0 / w_max) / 2.0));
}

// ||g_hat||_{L1(R)} on one grid level; |g_hat| is even.
double si_factor_l1(double alpha, Index t_intervals, Index w_intervals) {
  const double w_max = 1.0 / alpha + 12.0;
  const double ht = kSiFactorSupport / static_cast<double>(t_intervals);
  const double hw = w_max / static_cast<double>(w_intervals);
  const std::vector<double> weighted_g = weighted_si_factor(alpha, t_intervals);
  double outer = 0.0;
  for (Index i = 0; i <= w_intervals; ++i) {
    const double simpson = (i == 0 || i == w_intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    outer += simpson * si_factor_transform_at(weighted_g, hw * static_cast<double>(i), ht);
  }
  return 2.0 * outer * hw / 3.0;
}

}  // namespace

FourierNormResult fourier_l1_norm(const TargetSpec& spec, double tolerance, int max_levels) {
  const double alpha = spec.alpha();
  const double w_max = 1.0 / alpha + 12.0;
  // Level 0 resolves the Si transition (width ~alpha) with a few points and
  // the highest oscillation w_max with ~6 points per period.
  Index t_intervals = base_t_intervals(alpha);
  Index w_intervals = 2 * static_cast<Index>(std::ceil(w_max / 0.2 / 2.0));

  double previous = si_factor_l1(alpha, t_intervals, w_intervals);
  double change = std::numeric_limits<double>::infinity();
  for (int level = 1; level <= max_levels; ++level) {
    t_intervals *= 2;
    w_intervals *= 2;
    const double current = si_factor_l1(alpha, t_intervals, w_intervals);
    change = std::abs(current - previous) / std::abs(current);
    previous = current;
    if (change <= tolerance) {
      const double rest = std::pow(2.0 * kPi, static_cast<double>(spec.dimension() - 1) / 2.0);
      return {current * rest, current, change, level};
    }
  }
  throw AccuracyError("Fourier quadrature did not converge", change);
}

SiFactorTransform::SiFactorTransform(double alpha, int refinement) : alpha_(alpha) {
  if (!(alpha > 0.0)) throw PreconditionError("alpha must be positive");
  if (refinement < 0 || refinement > 8) throw PreconditionError("refinement level must be in [0, 8]");
  const Index t_intervals = base_t_intervals(alpha) << refinement;
  step_ = kSiFactorSupport / static_cast<double>(t_intervals);
  weighted_ = weighted_si_factor(alpha, t_intervals);
}

double SiFactorTransform::modulus(double omega) const { return si_factor_transform_at(weighted_, omega, step_); }

double optimal_marginal_density(double omega, Index axis, double alpha, double si_factor_l1_norm,
                                const SiFactorTransform* transform) {
  if (axis < 0) throw PreconditionError("axis must be >= 0");
  if (axis > 0) return std::exp(-omega * omega / 2.0) / std::sqrt(2.0 * kPi);
  if (!(si_factor_l1_norm > 0.0)) throw PreconditionError("L1 norm must be positive");
  if (transform != nullptr) return transform->modulus(omega) / si_factor_l1_norm;
  return SiFactorTransform(alpha).modulus(omega) / si_factor_l1_norm;
}

double error_bound_from_norm(double l1_norm, Index dimension, Index nodes, double lambda) {
  if (nodes < 1) throw PreconditionError("node count must be >= 1");
  if (!(lambda >= 0.0)) throw PreconditionError("lambda must be >= 0");
  return (1.0 + lambda) / (std::pow(2.0 * kPi, static_cast<double>(dimension)) * static_cast<double>(nodes)) *
         l1_norm * l1_norm;
}

double error_bound_constant(const TargetSpec& spec, Index nodes, double lambda) {
  return error_bound_from_norm(fourier_l1_norm(spec).l1_norm, spec.dimension(), nodes, lambda);
}

}  // namespace arff
