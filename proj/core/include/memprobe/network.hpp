#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <string>
#include <span>
#include <string_view>
#include <vector>

#include "memprobe/rng.hpp"

namespace memprobe {

enum class LayerKind { Dense, Conv2d, MaxPool2d, Dropout, Flatten };
enum class Activation { None, Relu, Sigmoid };

std::string_view to_string(LayerKind kind);
std::string_view to_string(Activation activation);
LayerKind layer_kind_from_string(std::string_view s);
Activation activation_from_string(std::string_view s);

struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  int units = 0;  // dense units or conv filters
  int kernel_h = 0;
  int kernel_w = 0;
  int pool_h = 0;
  int pool_w = 0;
  double rate = 0.0;
  Activation activation = Activation::None;

  static LayerSpec dense(int units, Activation activation);
  static LayerSpec conv2d(int filters, int kernel_h, int kernel_w, Activation activation);
  static LayerSpec maxpool2d(int pool_h, int pool_w);
  static LayerSpec dropout(double rate);
  static LayerSpec flatten();

  bool has_parameters() const { return kind == LayerKind::Dense || kind == LayerKind::Conv2d; }
  bool operator==(const LayerSpec&) const = default;
};

/// Activation volume of one sample, channel-major (c, y, x).
struct Shape3 {
  int channels = 1;
  int height = 1;
  int width = 1;

  Eigen::Index size() const { return Eigen::Index{channels} * height * width; }
  bool operator==(const Shape3&) const = default;
};

struct NetworkSpec {
  std::vector<LayerSpec> layers;
  int input_height = 28;
  int input_width = 28;
  std::string preset_name;

  Shape3 input_shape() const { return {1, input_height, input_width}; }

  /// Output shape of every layer; throws InvalidSpec when shapes do not
  /// compose or the head is not Dense(2, sigmoid).
  std::vector<Shape3> output_shapes() const;

  void validate() const { (void)output_shapes(); }

  /// Index of the penultimate dense layer, whose activations are the
  /// learned features.
  std::size_t feature_layer() const;
  int feature_width() const { return layers[feature_layer()].units; }

  bool operator==(const NetworkSpec&) const = default;
};

/// The six architectures: mlp2, mlp4, cnn and their *_dropout variants.
NetworkSpec preset(std::string_view name, int input_height = 28, int input_width = 28);
std::vector<std::string> preset_names();

/// Weights are (out x in) for dense layers and (filters x in_channels*kh*kw)
/// for convolutions.
struct LayerParams {
  Eigen::MatrixXd weights;
  Eigen::VectorXd bias;
};

using ParameterSet = std::vector<LayerParams>;  // one entry per layer, empty when parameter-free

std::size_t parameter_count(const ParameterSet& params);

/// Zero-filled tensors shaped like params.
ParameterSet zeros_like(const ParameterSet& params);

enum class OptimizerKind { Sgd, RmsProp };

struct OptimizerSpec {
  OptimizerKind kind = OptimizerKind::Sgd;
  double learning_rate = 0.01;
  double rho = 0.9;
  double epsilon = 1e-7;
  int batch_size = 128;

  static OptimizerSpec sgd(double learning_rate = 0.01, int batch_size = 128);
  static OptimizerSpec rmsprop(double learning_rate = 0.001, double rho = 0.9,
                               double epsilon = 1e-7, int batch_size = 128);
  void validate() const;
  bool operator==(const OptimizerSpec&) const = default;
};

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(std::string_view s);

struct OptimizerState {
  ParameterSet accumulators;  // rmsprop running mean of squared gradients
  std::int64_t steps = 0;
};

struct TrainedNetwork {
  NetworkSpec spec;
  ParameterSet params;
  std::int64_t epoch = 0;
  /// Seed of the training stream; epoch e draws from derive_seed(train_seed, Epoch, e).
  std::uint64_t train_seed = 0;
  std::uint64_t init_seed = 0;
  OptimizerState optimizer_state;

  std::size_t parameter_count() const { return memprobe::parameter_count(params); }
};

/// Glorot-uniform weights, zero biases.
TrainedNetwork init_network(const NetworkSpec& spec, std::uint64_t seed);

enum class Mode { Train, Eval };

/// Everything the backward pass needs from one forward pass.
struct ForwardPass {
  Eigen::MatrixXd input;               // (input size) x batch
  std::vector<Eigen::MatrixXd> pre;    // pre-activation, parameterised layers only
  std::vector<Eigen::MatrixXd> out;    // output of every layer
  std::vector<Eigen::MatrixXd> masks;  // dropout scale masks (train mode)
  std::vector<std::vector<Eigen::Index>> argmax;  // maxpool winners

  const Eigen::MatrixXd& output() const { return out.back(); }
};

/// batch holds one sample per column. rng is required in train mode when the
/// network has dropout layers.
ForwardPass forward(const TrainedNetwork& net, const Eigen::Ref<const Eigen::MatrixXd>& batch,
                    Mode mode, Rng* rng = nullptr);

struct LossAndGradients {
  double loss = 0.0;
  ParameterSet gradients;
};

/// Mean over the batch of the summed binary cross-entropy of the two sigmoid
/// outputs against one-hot labels.
LossAndGradients loss_and_gradients(const TrainedNetwork& net,
                                    const Eigen::Ref<const Eigen::MatrixXd>& batch,
                                    std::span<const int> labels, Mode mode = Mode::Train,
                                    Rng* rng = nullptr);

/// Loss only, without the backward pass.
double loss_value(const TrainedNetwork& net, const Eigen::Ref<const Eigen::MatrixXd>& batch,
                  std::span<const int> labels, Mode mode = Mode::Eval, Rng* rng = nullptr);

/// argmax of the two output units, ties to class 0.
std::vector<int> predict_classes(const TrainedNetwork& net,
                                 const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                 Eigen::Index chunk = 512);

/// N x d activations of the feature layer in eval mode.
Eigen::MatrixXd extract_features(const TrainedNetwork& net,
                                 const Eigen::Ref<const Eigen::MatrixXd>& inputs,
                                 Eigen::Index chunk = 512);

/// One optimizer step applied in place.
void apply_update(const OptimizerSpec& spec, OptimizerState& state, ParameterSet& params,
                  const ParameterSet& gradients);

}  // namespace memprobe
