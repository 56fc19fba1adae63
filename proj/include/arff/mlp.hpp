#pragma once

#include "arff/rng.hpp"
#include "arff/types.hpp"

#include <optional>
#include <string_view>
#include <utility>
#include <vector>

namespace arff {

enum class LayerActivation { kCosine, kRelu, kSigmoid, kIdentity };

std::string_view to_string(LayerActivation a) noexcept;
LayerActivation parse_layer_activation(std::string_view text);

/// h(x) = act(W x + b). W is out x in.
struct DenseLayer {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
  LayerActivation activation = LayerActivation::kRelu;
  bool bias_fixed_zero = false;  // bias held at zero and never updated
  bool trainable = true;

  Index inputs() const noexcept { return weights.cols(); }
  Index outputs() const noexcept { return weights.rows(); }
};

class MlpModel {
 public:
  MlpModel() = default;
  explicit MlpModel(std::vector<DenseLayer> layers);

  const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
  std::vector<DenseLayer>& layers() noexcept { return layers_; }

  Index input_dimension() const;
  Index output_dimension() const;
  Index parameter_count() const;

  /// Rows of `inputs` are samples; returns samples x outputs.
  Eigen::MatrixXd forward(const Eigen::MatrixXd& inputs) const;

 private:
  std::vector<DenseLayer> layers_;
};

/// Gradients of the mean squared error (mean over samples and channels).
struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  double loss = 0.0;
};

Gradients gradients(const MlpModel& model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

double mean_squared_error(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& truth);

/// Entries i.i.d. N(0, 2 / (fan_in + fan_out)).
Eigen::MatrixXd glorot_normal(Index rows, Index cols, CounterRng& rng);
/// Bias-shaped Glorot draw (fan_in = fan_out = size).
Eigen::VectorXd glorot_normal_vector(Index size, CounterRng& rng);

struct AdamState {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  long step = 0;
  std::vector<Eigen::MatrixXd> m_weights, v_weights;
  std::vector<Eigen::VectorXd> m_biases, v_biases;

  static AdamState for_model(const MlpModel& model, double learning_rate);
};

/// Bias-corrected Adam: m <- b1 m + (1-b1) g, v <- b2 v + (1-b2) g^2,
/// theta <- theta - lr * m_hat / (sqrt(v_hat) + eps). Frozen layers and fixed
/// biases are left untouched.
void adam_step(AdamState& state, MlpModel& model, const Gradients& grads);

struct EpochRecord {
  Index epoch = 0;
  double train_mse = 0.0;  // sample-weighted mean of the epoch's batch losses
  double val_mse = std::numeric_limits<double>::quiet_NaN();
  double wall_seconds = 0.0;
};

struct AdamTrainResult {
  MlpModel model;
  std::vector<EpochRecord> curve;
};

struct AdamOptions {
  Index epochs = 1;
  Index batch_size = 128;
  double learning_rate = 1e-3;
};

/// Mini-batch Adam with a full reshuffle per epoch from `rng`; the last short
/// batch is kept. `eval_inputs`/`eval_targets` (optional) give val_mse.
AdamTrainResult train_adam(MlpModel model, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                           const AdamOptions& options, CounterRng rng,
                           const Eigen::MatrixXd* eval_inputs = nullptr,
                           const Eigen::MatrixXd* eval_targets = nullptr);

/// Splits bias-extended frequencies into first-layer weights (K x d) and biases.
std::pair<Eigen::MatrixXd, Eigen::VectorXd> rff_layer_from_arff(const FrequencySet& extended, Index input_dimension);
FrequencySet merge_rff_layer(const Eigen::MatrixXd& weights, const Eigen::VectorXd& bias);

/// Two-layer cosine network equal to sum_k a_k cos(w_k.x + b_k); the output
/// layer holds the (real parts of the) amplitudes and a fixed zero bias.
MlpModel cosine_network(const FrequencySet& extended, const AmplitudeVector& amplitudes);

/// Coordinate-MLP variants compared in the image experiment.
enum class ImageApproach {
  kArffRff = 1,     // cosine layer from ARFF + ReLU layers
  kGlorotRff = 2,   // cosine layer Glorot-initialized + ReLU layers
  kReluOnly = 3,    // no cosine layer, `relu_layers` ReLU layers
  kReluDeeper = 4,  // no cosine layer, relu_layers + 1 ReLU layers
};

struct ImageModelOptions {
  Index input_dimension = 2;
  Index width = 256;
  Index relu_layers = 3;
  Index output_dimension = 3;
};

/// Builds the network with Glorot initialization everywhere except an ARFF
/// first layer (`arff_frequencies`, required for kArffRff). Output layer is
/// sigmoid with its bias fixed at zero.
MlpModel image_model(ImageApproach approach, const ImageModelOptions& options, CounterRng rng,
                     const FrequencySet* arff_frequencies = nullptr);

/// 10 log10(max_intensity^2 / MSE); +infinity when the images are identical.
double psnr(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& truth, double max_intensity);
/// MAX_I taken as the maximum of `truth`.
double psnr(const Eigen::MatrixXd& prediction, const Eigen::MatrixXd& truth);

}  // namespace arff
