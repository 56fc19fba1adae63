#include "arff/mlp.hpp"

#include "arff/errors.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace arff {

std::string_view to_string(LayerActivation a) noexcept {
  switch (a) {
    case LayerActivation::kCosine:
      return "cosine";
    case LayerActivation::kRelu:
      return "relu";
    case LayerActivation::kSigmoid:
      return "sigmoid";
    case LayerActivation::kIdentity:
      return "identity";
  }
  return "identity";
}

LayerActivation parse_layer_activation(std::string_view text) {
  if (text == "cosine") return LayerActivation::kCosine;
  if (text == "relu") return LayerActivation::kRelu;
  if (text == "sigmoid") return LayerActivation::kSigmoid;
  if (text == "identity") return LayerActivation::kIdentity;
  throw ConfigError("unknown layer activation '" + std::string(text) + "'");
}

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  if (layers_.empty()) throw PreconditionError("MLP needs at least one layer");
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const DenseLayer& l = layers_[i];
    if (l.bias.size() != l.outputs()) throw PreconditionError("bias length differs from layer width");
    if (i > 0 && l.inputs() != layers_[i - 1].outputs())
      throw PreconditionError("layer " + std::to_string(i) + " input width does not chain");
    if (l.bias_fixed_zero && !l.bias.isZero(0.0)) throw PreconditionError("fixed bias must be zero");
  }
}

Index MlpModel::input_dimension() const { return layers_.front().inputs(); }
Index MlpModel::output_dimension() const { return layers_.back().outputs(); }

Index MlpModel::parameter_count() const {
  Index n = 0;
  for (const DenseLayer& l : layers_) n += l.weights.size() + (l.bias_fixed_zero ? 0 : l.bias.size());
  return n;
}

namespace {

void activate(LayerActivation act, Eigen::MatrixXd& z) {
  switch (act) {
    case LayerActivation::kCosine:
      z = z.array().cos();
      break;
    case LayerActivation::kRelu:
      z = z.cwiseMax(0.0);
      break;
    case LayerActivation::kSigmoid:
      z = (1.0 + (-z.array()).exp()).inverse();
      break;
    case LayerActivation::kIdentity:
      break;
  }
}

// Column-major "features x samples" activations for one pass.
struct ForwardPass {
  std::vector<Eigen::MatrixXd> pre;   // z_l
  std::vector<Eigen::MatrixXd> post;  // a_l, post[0] is the input
};

ForwardPass forward_pass(const std::vector<DenseLayer>& layers, const Eigen::MatrixXd& inputs) {
  ForwardPass pass;
  pass.post.reserve(layers.size() + 1);
  pass.pre.reserve(layers.size());
  pass.post.push_back(inputs.transpose());
  for (const DenseLayer& l : layers) {
    Eigen::MatrixXd z = l.weights * pass.post.back();
    z.colwise() += l.bias;
    pass.pre.push_back(z);
    activate(l.activation, z);
    pass.post.push_back(std::move(z));
  }
  return pass;
}

}  // namespace

Eigen::MatrixXd MlpModel::forward(const Eigen::MatrixXd& inputs) const {
  if (inputs.cols() != input_dimension())
    throw PreconditionError("input dimension " + std::to_string(inputs.cols()) + " != " +
                            std::to_string(input_dimension()));
  Eigen::MatrixXd a = inputs.transpose();
  for (const DenseLayer& l : layers_) {
    Eigen::MatrixXd z = l.weights * a;
    z.colwise() += l.bias;
    activate(l.activation, z);
    a = std::move(z);
  }
  return a.transpose();
}

double mean_squared_error(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& truth) {
  if (prediction.rows() != truth.rows() || prediction.cols() != truth.cols())
    throw PreconditionError("MSE shape mismatch");
  if (truth.size() == 0) throw PreconditionError("MSE of empty arrays");
  return (prediction - truth).squaredNorm() / static_cast<double>(truth.size());
}

Gradients gradients(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  if (inputs.rows() < 1) throw PreconditionError("gradient batch is empty");
  if (inputs.rows() != targets.rows() || targets.cols() != model.output_dimension())
    throw PreconditionError("target shape does not match model/batch");
  if (inputs.cols() != model.input_dimension()) throw PreconditionError("input dimension mismatch");

  const auto& layers = model.layers();
  const ForwardPass pass = forward_pass(layers, inputs);
  const Eigen::MatrixXd residual = pass.post.back() - targets.transpose();
  const double scale = 1.0 / static_cast<double>(residual.size());

  Gradients g;
  g.loss = residual.squaredNorm() * scale;
  g.weights.resize(layers.size());
  g.biases.resize(layers.size());

  Eigen::MatrixXd delta = 2.0 * scale * residual;  // dL/da_L
  for (std::size_t idx = layers.size(); idx-- > 0;) {
    const DenseLayer& l = layers[idx];
    const Eigen::MatrixXd& z = pass.pre[idx];
    switch (l.activation) {
      case LayerActivation::kCosine:
        delta.array() *= -z.array().sin();
        break;
      case LayerActivation::kRelu:
        delta = (z.array() > 0.0).select(delta, 0.0);
        break;
      case LayerActivation::kSigmoid: {
        const auto& s = pass.post[idx + 1].array();
        delta.array() *= s * (1.0 - s);
        break;
      }
      case LayerActivation::kIdentity:
        break;
    }
    g.weights[idx] = delta * pass.post[idx].transpose();
    g.biases[idx] = l.bias_fixed_zero ? Eigen::VectorXd::Zero(l.outputs()) : Eigen::VectorXd(delta.rowwise().sum());
    if (idx > 0) delta = l.weights.transpose() * delta;
  }
  return g;
}

Eigen::MatrixXd glorot_normal(Index rows, Index cols, CounterRng& rng) {
  if (rows < 1 || cols < 1) throw PreconditionError("Glorot shape must be positive");
  Eigen::MatrixXd w(rows, cols);
  fill_standard_normal(rng, std::span<double>(w.data(), static_cast<std::size_t>(w.size())));
  return w * std::sqrt(2.0 / static_cast<double>(rows + cols));
}

Eigen::VectorXd glorot_normal_vector(Index size, CounterRng& rng) {
  if (size < 1) throw PreconditionError("Glorot shape must be positive");
  Eigen::VectorXd b(size);
  fill_standard_normal(rng, std::span<double>(b.data(), static_cast<std::size_t>(b.size())));
  return b * std::sqrt(1.0 / static_cast<double>(size));
}

AdamState AdamState::for_model(const MlpModel& model, double learning_rate) {
  AdamState s;
  s.learning_rate = learning_rate;
  for (const DenseLayer& l : model.layers()) {
    s.m_weights.push_back(Eigen::MatrixXd::Zero(l.outputs(), l.inputs()));
    s.v_weights.push_back(Eigen::MatrixXd::Zero(l.outputs(), l.inputs()));
    s.m_biases.push_back(Eigen::VectorXd::Zero(l.outputs()));
    s.v_biases.push_back(Eigen::VectorXd::Zero(l.outputs()));
  }
  return s;
}

namespace {

template <typename Param>
void adam_update(Param& theta, Param& m, Param& v, const Param& grad, double lr, double b1, double b2, double eps,
                 double correction1, double correction2) {
  m = b1 * m + (1.0 - b1) * grad;
  v.array() = b2 * v.array() + (1.0 - b2) * grad.array().square();
  theta.array() -= lr * (m.array() / correction1) / ((v.array() / correction2).sqrt() + eps);
}

}  // namespace

void adam_step(AdamState& state, MlpModel& model, const Gradients& grads) {
  auto& layers = model.layers();
  if (state.m_weights.size() != layers.size() || grads.weights.size() != layers.size())
    throw PreconditionError("Adam state does not match model");
  ++state.step;
  const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < layers.size(); ++i) {
    DenseLayer& l = layers[i];
    if (!l.trainable) continue;
    if (grads.weights[i].rows() != l.outputs() || grads.weights[i].cols() != l.inputs())
      throw PreconditionError("gradient shape does not match layer");
    adam_update(l.weights, state.m_weights[i], state.v_weights[i], grads.weights[i], state.learning_rate, state.beta1,
                state.beta2, state.epsilon, c1, c2);
    if (!l.bias_fixed_zero)
      adam_update(l.bias, state.m_biases[i], state.v_biases[i], grads.biases[i], state.learning_rate, state.beta1,
                  state.beta2, state.epsilon, c1, c2);
  }
}

AdamTrainResult train_adam(MlpModel model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                           const AdamOptions& options, CounterRng rng, const Eigen::MatrixXd* eval_inputs,
                           const Eigen::MatrixXd* eval_targets) {
  if (inputs.rows() < 1) throw PreconditionError("training data is empty");
  if (inputs.rows() != targets.rows()) throw PreconditionError("inputs and targets differ in length");
  if (options.batch_size < 1) throw PreconditionError("batch size must be >= 1");
  if (options.epochs < 0) throw PreconditionError("epoch count must be >= 0");
  if ((eval_inputs == nullptr) != (eval_targets == nullptr))
    throw PreconditionError("evaluation inputs and targets must be given together");

  const auto start = std::chrono::steady_clock::now();
  AdamState state = AdamState::for_model(model, options.learning_rate);
  const Index n = inputs.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  AdamTrainResult result;
  result.curve.reserve(static_cast<std::size_t>(options.epochs));

  for (Index epoch = 1; epoch <= options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Index{0});
    for (Index i = n - 1; i > 0; --i) {
      const auto j = static_cast<Index>(uniform_index(rng, static_cast<std::uint64_t>(i + 1)));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    double loss_sum = 0.0;
    for (Index begin = 0; begin < n; begin += options.batch_size) {
      const Index count = std::min(options.batch_size, n - begin);
      const std::vector<Index> idx(order.begin() + begin, order.begin() + begin + count);
      const Eigen::MatrixXd xb = inputs(idx, Eigen::all);
      const Eigen::MatrixXd yb = targets(idx, Eigen::all);
      const Gradients g = gradients(model, xb, yb);
      loss_sum += g.loss * static_cast<double>(count);
      adam_step(state, model, g);
    }
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_mse = loss_sum / static_cast<double>(n);
    if (eval_inputs != nullptr) rec.val_mse = mean_squared_error(model.forward(*eval_inputs), *eval_targets);
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.curve.push_back(rec);
  }
  result.model = std::move(model);
  return result;
}

std::pair<Eigen::MatrixXd, Eigen::VectorXd> rff_layer_from_arff(const FrequencySet& extended, Index input_dimension) {
  if (extended.dimension() != input_dimension + 1)
    throw PreconditionError("bias-extended frequencies must have dimension " + std::to_string(input_dimension + 1));
  return {extended.vectors().leftCols(input_dimension), extended.vectors().col(input_dimension)};
}

FrequencySet merge_rff_layer(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias) {
  if (weights.rows() != bias.size()) throw PreconditionError("RFF weights and bias differ in length");
  Eigen::MatrixXd merged(weights.rows(), weights.cols() + 1);
  merged.leftCols(weights.cols()) = weights;
  merged.col(weights.cols()) = bias;
  return FrequencySet(std::move(merged));
}

MlpModel cosine_network(const FrequencySet& extended, const AmplitudeVector& amplitudes) {
  if (amplitudes.count() != extended.count()) throw PreconditionError("amplitude count differs from node count");
  const Index d = extended.dimension() - 1;
  auto [w, b] = rff_layer_from_arff(extended, d);
  DenseLayer hidden{std::move(w), std::move(b), LayerActivation::kCosine, false, true};
  DenseLayer output{amplitudes.values().real().transpose(), Eigen::VectorXd::Zero(amplitudes.channels()),
                    LayerActivation::kIdentity, true, true};
  return MlpModel({std::move(hidden), std::move(output)});
}

MlpModel image_model(ImageApproach approach, const ImageModelOptions& options, CounterRng rng,
                     const FrequencySet* arff_frequencies) {
  if (options.width < 1 || options.relu_layers < 1) throw PreconditionError("width and depth must be positive");
  std::vector<DenseLayer> layers;
  Index in = options.input_dimension;
  const Index w = options.width;
  auto dense = [&](Index inputs, Index outputs, LayerActivation act) {
    DenseLayer l;
    l.weights = glorot_normal(outputs, inputs, rng);
    l.bias = glorot_normal_vector(outputs, rng);
    l.activation = act;
    return l;
  };

  Index relu_count = options.relu_layers;
  switch (approach) {
    case ImageApproach::kArffRff: {
      if (arff_frequencies == nullptr) throw PreconditionError("ARFF-initialized layer needs frequencies");
      if (arff_frequencies->count() != w) throw PreconditionError("ARFF node count must equal the layer width");
      auto [weights, bias] = rff_layer_from_arff(*arff_frequencies, in);
      layers.push_back(DenseLayer{std::move(weights), std::move(bias), LayerActivation::kCosine, false, true});
      break;
    }
    case ImageApproach::kGlorotRff:
      layers.push_back(dense(in, w, LayerActivation::kCosine));
      break;
    case ImageApproach::kReluOnly:
      break;
    case ImageApproach::kReluDeeper:
      ++relu_count;
      break;
  }
  for (Index i = 0; i < relu_count; ++i) {
    layers.push_back(dense(layers.empty() ? in : w, w, LayerActivation::kRelu));
  }
  DenseLayer out;
  out.weights = glorot_normal(options.output_dimension, w, rng);
  out.bias = Eigen::VectorXd::Zero(options.output_dimension);
  out.activation = LayerActivation::kSigmoid;
  out.bias_fixed_zero = true;
  layers.push_back(std::move(out));
  return MlpModel(std::move(layers));
}

double psnr(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& truth, double max_intensity) {
  const double mse = mean_squared_error(prediction, truth);
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(max_intensity * max_intensity / mse);
}

double psnr(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& truth) {
  return psnr(prediction, truth, truth.maxCoeff());
}

}  // namespace arff
