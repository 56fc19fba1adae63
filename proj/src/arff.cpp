#include "arff/arff.hpp"

#include "arff/errors.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <string>

namespace arff {

ProbabilityMass probability_mass(const AmplitudeVector& a) {
  if (a.count() < 1) throw PreconditionError("probability mass of an empty amplitude vector");
  const Eigen::VectorXd norms = a.node_norms();
  const double total = norms.sum();
  ProbabilityMass mass;
  if (!(total > 0.0) || !std::isfinite(total)) {
    mass.weights = Eigen::VectorXd::Constant(a.count(), 1.0 / static_cast<double>(a.count()));
    mass.degenerate = true;
    return mass;
  }
  mass.weights = norms / total;
  return mass;
}

double effective_sample_size(const ProbabilityMass& mass) {
  const double k = static_cast<double>(mass.size());
  const double ess = 1.0 / mass.weights.squaredNorm();
  // Rounding can push the exact extremes a few ulps outside [1, K].
  return std::clamp(ess, 1.0, k);
}

FrequencySet resample(const FrequencySet& freqs, const ProbabilityMass& mass, CounterRng& rng) {
  const Index k = freqs.count();
  if (mass.size() != k) throw PreconditionError("mass and frequency set differ in size");
  std::vector<double> cumulative(static_cast<std::size_t>(k));
  std::partial_sum(mass.weights.data(), mass.weights.data() + k, cumulative.begin());
  const double total = cumulative.back();

  Eigen::MatrixXd out(k, freqs.dimension());
  for (Index slot = 0; slot < k; ++slot) {
    const double u = uniform01(rng) * total;
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    // u can round up to `total`; step back over trailing zero-mass entries.
    Index j = std::min<Index>(static_cast<Index>(it - cumulative.begin()), k - 1);
    while (j > 0 && mass.weights(j) == 0.0) --j;
    out.row(slot) = freqs.vectors().row(j);
  }
  return FrequencySet(std::move(out));
}

Batch sample_batch(Index data_size, Index batch_size, CounterRng& rng) {
  if (batch_size < 1) throw PreconditionError("batch size must be >= 1");
  if (batch_size > data_size)
    throw PreconditionError("batch size " + std::to_string(batch_size) + " exceeds data size " +
                            std::to_string(data_size));
  Batch batch;
  batch.indices.resize(static_cast<std::size_t>(data_size));
  std::iota(batch.indices.begin(), batch.indices.end(), Index{0});
  if (batch_size == data_size) return batch;
  // Partial Fisher-Yates: the first batch_size slots are a uniform sample.
  for (Index i = 0; i < batch_size; ++i) {
    const Index j = i + static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(data_size - i)));
    std::swap(batch.indices[static_cast<std::size_t>(i)], batch.indices[static_cast<std::size_t>(j)]);
  }
  batch.indices.resize(static_cast<std::size_t>(batch_size));
  return batch;
}

Batch sample_batch(const Dataset& data, Index batch_size, CounterRng& rng) {
  return sample_batch(data.size(), batch_size, rng);
}

std::string_view to_string(Variant v) noexcept {
  switch (v) {
    case Variant::kAdaptiveMetropolis:
      return "AM";
    case Variant::kAdaptiveMetropolisResampling:
      return "AM-R";
    case Variant::kRandomWalkResampling:
      return "RW-R";
  }
  return "AM";
}

Variant parse_variant(std::string_view text) {
  if (text == "AM" || text == "am") return Variant::kAdaptiveMetropolis;
  if (text == "AM-R" || text == "am-r" || text == "AMR") return Variant::kAdaptiveMetropolisResampling;
  if (text == "RW-R" || text == "rw-r" || text == "RWR") return Variant::kRandomWalkResampling;
  throw ConfigError("unknown variant '" + std::string(text) + "' (expected AM, AM-R or RW-R)");
}

void apply_variant(ArffConfig& config, Variant variant) {
  switch (variant) {
    case Variant::kAdaptiveMetropolis:
      config.resample_rule = ResampleRule::constant(0.0);
      config.metropolis_rule = MetropolisRule::constant(true);
      break;
    case Variant::kAdaptiveMetropolisResampling:
      config.resample_rule = ResampleRule::constant(0.75);
      config.metropolis_rule = MetropolisRule::constant(true);
      break;
    case Variant::kRandomWalkResampling:
      config.resample_rule = ResampleRule::constant(1.0);
      config.metropolis_rule = MetropolisRule::constant(false);
      break;
  }
}

void ArffConfig::validate(Index nodes, Index data_size) const {
  if (iterations < 1) throw ConfigError("iterations N must be >= 1");
  if (!(step_stddev >= 0.0) || !std::isfinite(step_stddev)) throw ConfigError("step_stddev delta must be >= 0");
  if (!(gamma >= 1.0) || !std::isfinite(gamma)) throw ConfigError("Metropolis exponent gamma must be >= 1");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw ConfigError("Tikhonov lambda must be > 0");
  if (!(nodes < batch_size)) throw ConfigError("batch size M_B must exceed the node count K");
  if (batch_size > data_size) throw ConfigError("batch size M_B must not exceed the data size M");
  for (double r : {resample_rule.value, resample_rule.warmup_value})
    if (!(r >= 0.0 && r <= 1.0)) throw ConfigError("resampling rule values must lie in [0, 1]");
  if (resample_rule.warmup < 0 || metropolis_rule.warmup < 0) throw ConfigError("warm-up lengths must be >= 0");
}

double acceptance_ratio(double proposal_norm, double current_norm, double gamma) noexcept {
  if (current_norm == 0.0) return proposal_norm > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  return std::pow(proposal_norm / current_norm, gamma);
}

namespace {

struct BatchData {
  Eigen::MatrixXd inputs;
  Eigen::MatrixXd targets;
};

BatchData gather(const Dataset& data, const Batch& batch) {
  if (batch.size() == data.size()) return {data.inputs, data.outputs};
  return {data.inputs(batch.indices, Eigen::all), data.outputs(batch.indices, Eigen::all)};
}

struct Solved {
  DesignMatrix design;
  NormalEquations normal;
  AmplitudeVector amplitudes;
};

Solved solve_on(const FrequencySet& freqs, const BatchData& batch, double lambda, ActivationKind kind,
                NormKind norm_kind, Index& fallbacks) {
  Solved s;
  s.design = assemble_design(freqs, batch.inputs, kind);
  s.normal = assemble_normal_equations(s.design, batch.targets);
  SolveDiagnostics diag;
  s.amplitudes = solve_normal_equations(s.normal, lambda, norm_kind, &diag);
  if (diag.used_fallback) ++fallbacks;
  return s;
}

Eigen::MatrixXd draw_steps(CounterRng rng, Index count, Index dim) {
  Eigen::MatrixXd steps(count, dim);
  fill_standard_normal(rng, std::span<double>(steps.data(), static_cast<std::size_t>(steps.size())));
  return steps;
}

}  // namespace

MetropolisResult metropolis_sweep(const FrequencySet& freqs, const AmplitudeVector& current,
                                  const Eigen::MatrixXd& batch_inputs, const Eigen::MatrixXd& batch_targets,
                                  const Eigen::MatrixXd& steps, double delta, double gamma, double lambda,
                                  ActivationKind kind, CounterRng& acceptance_rng) {
  const Index k = freqs.count();
  if (current.count() != k) throw PreconditionError("amplitudes and frequencies differ in count");
  if (steps.rows() != k || steps.cols() != freqs.dimension()) throw PreconditionError("step matrix shape mismatch");

  const FrequencySet proposal(freqs.vectors() + delta * steps);
  const DesignMatrix design = assemble_design(proposal, batch_inputs, kind);
  const LsqProblem problem{design, batch_targets, lambda, current.norm_kind()};
  AmplitudeVector proposed = solve_regularized(problem);

  const Eigen::VectorXd current_norms = current.node_norms();
  const Eigen::VectorXd proposed_norms = proposed.node_norms();

  MetropolisResult result{freqs, std::move(proposed), 0};
  for (Index node = 0; node < k; ++node) {
    const double u = uniform01(acceptance_rng);
    if (acceptance_ratio(proposed_norms(node), current_norms(node), gamma) > u) {
      result.frequencies.vectors().row(node) = proposal.vectors().row(node);
      ++result.accepted;
    }
  }
  return result;
}

TrainTrace train(const ArffConfig& config, const Dataset& data, const FrequencySet& initial,
                 const Dataset* test_data, const IterationObserver& observer) {
  data.validate();
  const Index k = initial.count();
  config.validate(k, data.size());
  const Index expected_dim =
      config.activation == ActivationKind::kComplexExp ? data.input_dimension() : data.input_dimension() + 1;
  if (initial.dimension() != expected_dim)
    throw PreconditionError("initial frequencies have dimension " + std::to_string(initial.dimension()) +
                            ", expected " + std::to_string(expected_dim));
  if (test_data != nullptr) {
    test_data->validate();
    if (test_data->input_dimension() != data.input_dimension() ||
        test_data->output_channels() != data.output_channels())
      throw PreconditionError("test data shape differs from training data");
  }

  const auto start = std::chrono::steady_clock::now();
  const CounterRng root(config.seed);
  const CounterRng batch_stream = stream(root, StreamPurpose::kBatch);
  const CounterRng proposal_stream = stream(root, StreamPurpose::kProposal);
  const CounterRng acceptance_stream = stream(root, StreamPurpose::kAcceptance);
  const CounterRng resampling_stream = stream(root, StreamPurpose::kResampling);

  TrainTrace trace;
  trace.records.reserve(static_cast<std::size_t>(config.iterations));
  FrequencySet freqs = initial;
  const double lambda = config.lambda;

  CounterRng batch_rng = batch_stream.split(0);
  BatchData batch = gather(data, sample_batch(data, config.batch_size, batch_rng));
  Solved solved = solve_on(freqs, batch, lambda, config.activation, config.norm_kind, trace.fallback_solves);
  AmplitudeVector a = solved.amplitudes;
  if (observer) observer(0, freqs, a);

  const std::uint64_t n_max = static_cast<std::uint64_t>(config.iterations);
  for (std::uint64_t n = 1; n <= n_max; ++n) {
    const Index iteration = static_cast<Index>(n);
    IterationRecord record;
    record.iteration = iteration;

    const ProbabilityMass mass = probability_mass(a);
    record.degenerate_amplitudes = mass.degenerate;
    batch_rng = batch_stream.split(n);
    batch = gather(data, sample_batch(data, config.batch_size, batch_rng));
    record.ess = effective_sample_size(mass);

    const bool metropolis = config.metropolis_rule(iteration);
    if (record.ess <= config.resample_rule(iteration) * static_cast<double>(k)) {
      CounterRng resampling_rng = resampling_stream.split(n);
      freqs = resample(freqs, mass, resampling_rng);
      record.resampled = true;
      if (metropolis) {
        a = solve_on(freqs, batch, lambda, config.activation, config.norm_kind, trace.fallback_solves).amplitudes;
        ++record.solves;
      }
    }

    const Eigen::MatrixXd steps = draw_steps(proposal_stream.split(n), k, freqs.dimension());
    if (metropolis) {
      CounterRng acceptance_rng = acceptance_stream.split(n);
      MetropolisResult sweep = metropolis_sweep(freqs, a, batch.inputs, batch.targets, steps, config.step_stddev,
                                                config.gamma, lambda, config.activation, acceptance_rng);
      ++record.solves;
      freqs = std::move(sweep.frequencies);
      record.accepted = sweep.accepted;
    } else {
      freqs.vectors() += config.step_stddev * steps;
    }

    solved = solve_on(freqs, batch, lambda, config.activation, config.norm_kind, trace.fallback_solves);
    ++record.solves;
    a = solved.amplitudes;

    record.train_error = residual_metric(solved.normal, a);
    record.train_mse = data_space_metric(solved.design, a, batch.targets);
    if (test_data != nullptr) {
      const DesignMatrix test_design = assemble_design(freqs, test_data->inputs, config.activation);
      record.test_error = residual_metric(test_design, a, test_data->outputs);
      record.test_mse = data_space_metric(test_design, a, test_data->outputs);
    }
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    trace.records.push_back(record);
    if (observer) observer(iteration, freqs, a);
  }

  trace.frequencies = std::move(freqs);
  trace.amplitudes = std::move(a);
  return trace;
}

Eigen::MatrixXcd predict(const FrequencySet& freqs, const AmplitudeVector& a, const Eigen::MatrixXd& points,
                         ActivationKind kind) {
  return assemble_design(freqs, points, kind).apply(a.values());
}

}  // namespace arff
