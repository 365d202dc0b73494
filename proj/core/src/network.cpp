#include "memprobe/network.hpp"

#include <cmath>
#include <string>

#include "memprobe/error.hpp"

namespace memprobe {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;

void apply_activation(Activation act, const MatrixXd& pre, MatrixXd& out) {
  switch (act) {
    case Activation::None: out = pre; break;
    case Activation::Relu: out = pre.cwiseMax(0.0); break;
    case Activation::Sigmoid: out = (1.0 + (-pre.array()).exp()).inverse().matrix(); break;
  }
}

/// Gradient wrt the pre-activation given the gradient wrt the output.
void activation_backward(Activation act, const MatrixXd& pre, const MatrixXd& out, MatrixXd& g) {
  switch (act) {
    case Activation::None: break;
    case Activation::Relu: g = (pre.array() > 0.0).select(g, 0.0); break;
    case Activation::Sigmoid: g.array() *= out.array() * (1.0 - out.array()); break;
  }
}

/// Row `oy*wo + ox`, column `c*kh*kw + ky*kw + kx` of the patch matrix.
void im2col(const double* in, const Shape3& s, int kh, int kw, MatrixXd& patches) {
  const int ho = s.height - kh + 1;
  const int wo = s.width - kw + 1;
  patches.resize(Index{ho} * wo, Index{s.channels} * kh * kw);
  for (int c = 0; c < s.channels; ++c) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const Index col = (Index{c} * kh + ky) * kw + kx;
        double* dst = patches.col(col).data();
        for (int oy = 0; oy < ho; ++oy) {
          const double* src = in + (Index{c} * s.height + oy + ky) * s.width + kx;
          for (int ox = 0; ox < wo; ++ox) dst[Index{oy} * wo + ox] = src[ox];
        }
      }
    }
  }
}

void col2im_add(const MatrixXd& dpatches, const Shape3& s, int kh, int kw, double* din) {
  const int ho = s.height - kh + 1;
  const int wo = s.width - kw + 1;
  for (int c = 0; c < s.channels; ++c) {
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx) {
        const Index col = (Index{c} * kh + ky) * kw + kx;
        const double* src = dpatches.col(col).data();
        for (int oy = 0; oy < ho; ++oy) {
          double* dst = din + (Index{c} * s.height + oy + ky) * s.width + kx;
          for (int ox = 0; ox < wo; ++ox) dst[ox] += src[Index{oy} * wo + ox];
        }
      }
    }
  }
}

MatrixXd conv_forward(const LayerParams& p, const LayerSpec& layer, const Shape3& in_shape,
                      const Shape3& out_shape, const MatrixXd& x) {
  const Index spatial = Index{out_shape.height} * out_shape.width;
  MatrixXd pre(out_shape.size(), x.cols());
  MatrixXd patches;
  for (Index s = 0; s < x.cols(); ++s) {
    im2col(x.col(s).data(), in_shape, layer.kernel_h, layer.kernel_w, patches);
    Eigen::Map<MatrixXd> o(pre.col(s).data(), spatial, out_shape.channels);
    o.noalias() = patches * p.weights.transpose();
    o.rowwise() += p.bias.transpose();
  }
  return pre;
}

MatrixXd pool_forward(const LayerSpec& layer, const Shape3& in_shape, const Shape3& out_shape,
                      const MatrixXd& x, std::vector<Index>* argmax) {
  MatrixXd out(out_shape.size(), x.cols());
  if (argmax) argmax->resize(static_cast<std::size_t>(out.size()));
  for (Index s = 0; s < x.cols(); ++s) {
    const double* in = x.col(s).data();
    for (int c = 0; c < out_shape.channels; ++c) {
      for (int oy = 0; oy < out_shape.height; ++oy) {
        for (int ox = 0; ox < out_shape.width; ++ox) {
          Index best = (Index{c} * in_shape.height + oy * layer.pool_h) * in_shape.width +
                       ox * layer.pool_w;
          for (int py = 0; py < layer.pool_h; ++py) {
            for (int px = 0; px < layer.pool_w; ++px) {
              const Index idx =
                  (Index{c} * in_shape.height + oy * layer.pool_h + py) * in_shape.width +
                  ox * layer.pool_w + px;
              if (in[idx] > in[best]) best = idx;
            }
          }
          const Index j = (Index{c} * out_shape.height + oy) * out_shape.width + ox;
          out(j, s) = in[best];
          if (argmax) (*argmax)[static_cast<std::size_t>(s * out.rows() + j)] = best;
        }
      }
    }
  }
  return out;
}

MatrixXd dropout_mask(double rate, Index rows, Index cols, Rng& rng) {
  MatrixXd mask(rows, cols);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) mask(i, j) = rng.uniform() >= rate ? keep_scale : 0.0;
  }
  return mask;
}

void check_input(const NetworkSpec& spec, Index rows) {
  if (rows != spec.input_shape().size()) {
    throw Error(ErrorCode::ShapeMismatch, "input has " + std::to_string(rows) +
                                              " values per sample, network expects " +
                                              std::to_string(spec.input_shape().size()));
  }
}

/// Eval-mode forward through layers [0, last], keeping only the running activation.
MatrixXd forward_eval_until(const TrainedNetwork& net, const Eigen::Ref<const MatrixXd>& batch,
                            std::size_t last) {
  const auto shapes = net.spec.output_shapes();
  MatrixXd x = batch;
  MatrixXd pre;
  Shape3 in_shape = net.spec.input_shape();
  for (std::size_t i = 0; i <= last; ++i) {
    const LayerSpec& layer = net.spec.layers[i];
    const LayerParams& p = net.params[i];
    switch (layer.kind) {
      case LayerKind::Dense:
        pre.noalias() = p.weights * x;
        pre.colwise() += p.bias;
        apply_activation(layer.activation, pre, x);
        break;
      case LayerKind::Conv2d:
        pre = conv_forward(p, layer, in_shape, shapes[i], x);
        apply_activation(layer.activation, pre, x);
        break;
      case LayerKind::MaxPool2d:
        x = pool_forward(layer, in_shape, shapes[i], x, nullptr);
        break;
      case LayerKind::Dropout:
      case LayerKind::Flatten:
        break;
    }
    in_shape = shapes[i];
  }
  return x;
}

}  // namespace

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Dense: return "dense";
    case LayerKind::Conv2d: return "conv2d";
    case LayerKind::MaxPool2d: return "maxpool2d";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Flatten: return "flatten";
  }
  return "?";
}

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::None: return "none";
    case Activation::Relu: return "relu";
    case Activation::Sigmoid: return "sigmoid";
  }
  return "?";
}

LayerKind layer_kind_from_string(std::string_view s) {
  for (auto k : {LayerKind::Dense, LayerKind::Conv2d, LayerKind::MaxPool2d, LayerKind::Dropout,
                 LayerKind::Flatten}) {
    if (to_string(k) == s) return k;
  }
  throw Error(ErrorCode::InvalidSpec, "unknown layer kind '" + std::string(s) + "'");
}

Activation activation_from_string(std::string_view s) {
  for (auto a : {Activation::None, Activation::Relu, Activation::Sigmoid}) {
    if (to_string(a) == s) return a;
  }
  throw Error(ErrorCode::InvalidSpec, "unknown activation '" + std::string(s) + "'");
}

LayerSpec LayerSpec::dense(int units, Activation activation) {
  LayerSpec l;
  l.kind = LayerKind::Dense;
  l.units = units;
  l.activation = activation;
  return l;
}

LayerSpec LayerSpec::conv2d(int filters, int kernel_h, int kernel_w, Activation activation) {
  LayerSpec l;
  l.kind = LayerKind::Conv2d;
  l.units = filters;
  l.kernel_h = kernel_h;
  l.kernel_w = kernel_w;
  l.activation = activation;
  return l;
}

LayerSpec LayerSpec::maxpool2d(int pool_h, int pool_w) {
  LayerSpec l;
  l.kind = LayerKind::MaxPool2d;
  l.pool_h = pool_h;
  l.pool_w = pool_w;
  return l;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec l;
  l.kind = LayerKind::Dropout;
  l.rate = rate;
  return l;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec l;
  l.kind = LayerKind::Flatten;
  return l;
}

std::vector<Shape3> NetworkSpec::output_shapes() const {
  if (input_height < 1 || input_width < 1) throw Error(ErrorCode::InvalidSpec, "empty input");
  if (layers.empty()) throw Error(ErrorCode::InvalidSpec, "network has no layers");
  std::vector<Shape3> shapes;
  shapes.reserve(layers.size());
  Shape3 s = input_shape();
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    const std::string where = "layer " + std::to_string(i) + " (" +
                              std::string(to_string(l.kind)) + "): ";
    switch (l.kind) {
      case LayerKind::Dense:
        if (l.units < 1) throw Error(ErrorCode::InvalidSpec, where + "units must be >= 1");
        s = {l.units, 1, 1};
        break;
      case LayerKind::Conv2d:
        if (l.units < 1) throw Error(ErrorCode::InvalidSpec, where + "filters must be >= 1");
        if (l.kernel_h < 1 || l.kernel_w < 1 || l.kernel_h > s.height || l.kernel_w > s.width) {
          throw Error(ErrorCode::InvalidSpec, where + "kernel does not fit the input");
        }
        s = {l.units, s.height - l.kernel_h + 1, s.width - l.kernel_w + 1};
        break;
      case LayerKind::MaxPool2d:
        if (l.pool_h < 1 || l.pool_w < 1 || l.pool_h > s.height || l.pool_w > s.width) {
          throw Error(ErrorCode::InvalidSpec, where + "pool does not fit the input");
        }
        s = {s.channels, s.height / l.pool_h, s.width / l.pool_w};
        break;
      case LayerKind::Dropout:
        if (!(l.rate >= 0.0 && l.rate < 1.0)) {
          throw Error(ErrorCode::InvalidSpec, where + "rate must be in [0,1)");
        }
        break;
      case LayerKind::Flatten:
        s = {static_cast<int>(s.size()), 1, 1};
        break;
    }
    if (l.kind != LayerKind::Dense && l.kind != LayerKind::Conv2d &&
        l.activation != Activation::None) {
      throw Error(ErrorCode::InvalidSpec, where + "activation on a parameter-free layer");
    }
    shapes.push_back(s);
  }
  const LayerSpec& head = layers.back();
  if (head.kind != LayerKind::Dense || head.units != 2 || head.activation != Activation::Sigmoid) {
    throw Error(ErrorCode::InvalidSpec, "final layer must be Dense(2, sigmoid)");
  }
  (void)feature_layer();
  return shapes;
}

std::size_t NetworkSpec::feature_layer() const {
  for (std::size_t i = layers.size() - 1; i-- > 0;) {
    if (layers[i].kind == LayerKind::Dense) return i;
  }
  throw Error(ErrorCode::InvalidSpec, "no dense feature layer before the output layer");
}

NetworkSpec preset(std::string_view name, int input_height, int input_width) {
  using A = Activation;
  NetworkSpec spec;
  spec.input_height = input_height;
  spec.input_width = input_width;
  spec.preset_name = std::string(name);
  auto& L = spec.layers;
  if (name == "mlp2") {
    L = {LayerSpec::dense(256, A::Relu), LayerSpec::dense(16, A::Relu),
         LayerSpec::dense(2, A::Sigmoid)};
  } else if (name == "mlp4") {
    L = {LayerSpec::dense(256, A::Relu), LayerSpec::dense(128, A::Relu),
         LayerSpec::dense(64, A::Relu), LayerSpec::dense(16, A::Relu),
         LayerSpec::dense(2, A::Sigmoid)};
  } else if (name == "cnn") {
    L = {LayerSpec::conv2d(32, 3, 3, A::Relu), LayerSpec::conv2d(64, 3, 3, A::Relu),
         LayerSpec::maxpool2d(2, 2), LayerSpec::flatten(), LayerSpec::dense(16, A::Relu),
         LayerSpec::dense(2, A::Sigmoid)};
  } else if (name == "mlp2_dropout") {
    L = {LayerSpec::dense(256, A::Relu), LayerSpec::dropout(0.25), LayerSpec::dense(16, A::Relu),
         LayerSpec::dropout(0.5), LayerSpec::dense(2, A::Sigmoid)};
  } else if (name == "mlp4_dropout") {
    L = {LayerSpec::dense(256, A::Relu), LayerSpec::dropout(0.25),
         LayerSpec::dense(128, A::Relu), LayerSpec::dropout(0.5),
         LayerSpec::dense(64, A::Relu),  LayerSpec::dropout(0.5),
         LayerSpec::dense(16, A::Relu),  LayerSpec::dropout(0.5),
         LayerSpec::dense(2, A::Sigmoid)};
  } else if (name == "cnn_dropout") {
    L = {LayerSpec::conv2d(32, 3, 3, A::Relu), LayerSpec::conv2d(64, 3, 3, A::Relu),
         LayerSpec::maxpool2d(2, 2), LayerSpec::dropout(0.25), LayerSpec::flatten(),
         LayerSpec::dense(16, A::Relu), LayerSpec::dropout(0.5),
         LayerSpec::dense(2, A::Sigmoid)};
  } else {
    throw Error(ErrorCode::InvalidSpec, "unknown preset '" + std::string(name) + "'");
  }
  spec.validate();
  return spec;
}

std::vector<std::string> preset_names() {
  return {"mlp2", "mlp4", "cnn", "mlp2_dropout", "mlp4_dropout", "cnn_dropout"};
}

std::size_t parameter_count(const ParameterSet& params) {
  std::size_t n = 0;
  for (const auto& p : params) n += static_cast<std::size_t>(p.weights.size() + p.bias.size());
  return n;
}

ParameterSet zeros_like(const ParameterSet& params) {
  ParameterSet out(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    out[i].weights = MatrixXd::Zero(params[i].weights.rows(), params[i].weights.cols());
    out[i].bias = Eigen::VectorXd::Zero(params[i].bias.size());
  }
  return out;
}

TrainedNetwork init_network(const NetworkSpec& spec, std::uint64_t seed) {
  const auto shapes = spec.output_shapes();
  TrainedNetwork net;
  net.spec = spec;
  net.init_seed = seed;
  net.params.resize(spec.layers.size());
  Rng rng(seed);
  Shape3 in = spec.input_shape();
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const LayerSpec& l = spec.layers[i];
    Index rows = 0, cols = 0;
    double fan_in = 0, fan_out = 0;
    if (l.kind == LayerKind::Dense) {
      rows = l.units;
      cols = in.size();
      fan_in = static_cast<double>(cols);
      fan_out = l.units;
    } else if (l.kind == LayerKind::Conv2d) {
      const double receptive = double(l.kernel_h) * l.kernel_w;
      rows = l.units;
      cols = Index{in.channels} * l.kernel_h * l.kernel_w;
      fan_in = in.channels * receptive;
      fan_out = l.units * receptive;
    }
    if (rows > 0) {
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      auto& p = net.params[i];
      p.weights.resize(rows, cols);
      for (Index k = 0; k < p.weights.size(); ++k) {
        p.weights.data()[k] = (2.0 * rng.uniform() - 1.0) * limit;
      }
      p.bias = Eigen::VectorXd::Zero(rows);
    }
    in = shapes[i];
  }
  return net;
}

ForwardPass forward(const TrainedNetwork& net, const Eigen::Ref<const MatrixXd>& batch, Mode mode,
                    Rng* rng) {
  check_input(net.spec, batch.rows());
  const auto shapes = net.spec.output_shapes();
  const std::size_t n_layers = net.spec.layers.size();

  ForwardPass fp;
  fp.input = batch;
  fp.pre.resize(n_layers);
  fp.out.resize(n_layers);
  fp.masks.resize(n_layers);
  fp.argmax.resize(n_layers);

  Shape3 in_shape = net.spec.input_shape();
  for (std::size_t i = 0; i < n_layers; ++i) {
    const LayerSpec& layer = net.spec.layers[i];
    const LayerParams& p = net.params[i];
    const MatrixXd& x = i == 0 ? fp.input : fp.out[i - 1];
    switch (layer.kind) {
      case LayerKind::Dense:
        fp.pre[i].noalias() = p.weights * x;
        fp.pre[i].colwise() += p.bias;
        apply_activation(layer.activation, fp.pre[i], fp.out[i]);
        break;
      case LayerKind::Conv2d:
        fp.pre[i] = conv_forward(p, layer, in_shape, shapes[i], x);
        apply_activation(layer.activation, fp.pre[i], fp.out[i]);
        break;
      case LayerKind::MaxPool2d:
        fp.out[i] = pool_forward(layer, in_shape, shapes[i], x, &fp.argmax[i]);
        break;
      case LayerKind::Dropout:
        if (mode == Mode::Train && layer.rate > 0.0) {
          if (rng == nullptr) throw Error(ErrorCode::InvalidSpec, "train-mode dropout needs an rng");
          fp.masks[i] = dropout_mask(layer.rate, x.rows(), x.cols(), *rng);
          fp.out[i] = x.cwiseProduct(fp.masks[i]);
        } else {
          fp.out[i] = x;
        }
        break;
      case LayerKind::Flatten:
        fp.out[i] = x;
        break;
    }
    in_shape = shapes[i];
  }
  return fp;
}

namespace {

MatrixXd one_hot(std::span<const int> labels) {
  MatrixXd t = MatrixXd::Zero(2, static_cast<Index>(labels.size()));
  for (std::size_t s = 0; s < labels.size(); ++s) {
    const int y = labels[s];
    if (y != 0 && y != 1) throw Error(ErrorCode::ShapeMismatch, "label outside {0,1}");
    t(y, static_cast<Index>(s)) = 1.0;
  }
  return t;
}

double bce_from_logits(const MatrixXd& z, const MatrixXd& t) {
  // softplus(z) - t*z, written to stay finite for large |z|.
  const auto softplus = z.array().max(0.0) + (-z.array().abs()).exp().log1p();
  const double total = (softplus - t.array() * z.array()).sum();
  return total / static_cast<double>(z.cols());
}

}  // namespace

double loss_value(const TrainedNetwork& net, const Eigen::Ref<const MatrixXd>& batch,
                  std::span<const int> labels, Mode mode, Rng* rng) {
  if (static_cast<Index>(labels.size()) != batch.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "label count differs from batch size");
  }
  const ForwardPass fp = forward(net, batch, mode, rng);
  return bce_from_logits(fp.pre.back(), one_hot(labels));
}

LossAndGradients loss_and_gradients(const TrainedNetwork& net,
                                    const Eigen::Ref<const MatrixXd>& batch,
                                    std::span<const int> labels, Mode mode, Rng* rng) {
  if (static_cast<Index>(labels.size()) != batch.cols()) {
    throw Error(ErrorCode::ShapeMismatch, "label count differs from batch size");
  }
  const ForwardPass fp = forward(net, batch, mode, rng);
  const MatrixXd t = one_hot(labels);

  LossAndGradients result;
  result.loss = bce_from_logits(fp.pre.back(), t);
  if (!std::isfinite(result.loss)) throw Error(ErrorCode::NonFiniteLoss, "loss is not finite");

  const auto shapes = net.spec.output_shapes();
  const std::size_t n_layers = net.spec.layers.size();
  result.gradients = zeros_like(net.params);

  // g: gradient wrt the output of layer i; for the head it is wrt the logits.
  MatrixXd g = (fp.output() - t) / static_cast<double>(batch.cols());
  MatrixXd patches, dpatches;
  for (std::size_t i = n_layers; i-- > 0;) {
    const LayerSpec& layer = net.spec.layers[i];
    const LayerParams& p = net.params[i];
    LayerParams& grad = result.gradients[i];
    const MatrixXd& x = i == 0 ? fp.input : fp.out[i - 1];
    const Shape3 in_shape = i == 0 ? net.spec.input_shape() : shapes[i - 1];
    const bool need_input_grad = i > 0;

    switch (layer.kind) {
      case LayerKind::Dense: {
        if (i + 1 != n_layers) activation_backward(layer.activation, fp.pre[i], fp.out[i], g);
        grad.weights.noalias() = g * x.transpose();
        grad.bias = g.rowwise().sum();
        if (need_input_grad) g = p.weights.transpose() * g;
        break;
      }
      case LayerKind::Conv2d: {
        activation_backward(layer.activation, fp.pre[i], fp.out[i], g);
        const Shape3& out_shape = shapes[i];
        const Index spatial = Index{out_shape.height} * out_shape.width;
        MatrixXd dx = need_input_grad ? MatrixXd::Zero(x.rows(), x.cols()) : MatrixXd();
        for (Index s = 0; s < x.cols(); ++s) {
          Eigen::Map<const MatrixXd> go(g.col(s).data(), spatial, out_shape.channels);
          im2col(x.col(s).data(), in_shape, layer.kernel_h, layer.kernel_w, patches);
          grad.weights.noalias() += go.transpose() * patches;
          grad.bias += go.colwise().sum().transpose();
          if (need_input_grad) {
            dpatches.noalias() = go * p.weights;
            col2im_add(dpatches, in_shape, layer.kernel_h, layer.kernel_w, dx.col(s).data());
          }
        }
        g = std::move(dx);
        break;
      }
      case LayerKind::MaxPool2d: {
        MatrixXd dx = MatrixXd::Zero(x.rows(), x.cols());
        const auto& winners = fp.argmax[i];
        for (Index s = 0; s < g.cols(); ++s) {
          for (Index j = 0; j < g.rows(); ++j) {
            dx(winners[static_cast<std::size_t>(s * g.rows() + j)], s) += g(j, s);
          }
        }
        g = std::move(dx);
        break;
      }
      case LayerKind::Dropout:
        if (fp.masks[i].size() != 0) g.array() *= fp.masks[i].array();
        break;
      case LayerKind::Flatten:
        break;
    }
  }
  return result;
}

std::vector<int> predict_classes(const TrainedNetwork& net,
                                 const Eigen::Ref<const MatrixXd>& inputs, Index chunk) {
  check_input(net.spec, inputs.rows());
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(inputs.cols()));
  for (Index start = 0; start < inputs.cols(); start += chunk) {
    const Index n = std::min(chunk, inputs.cols() - start);
    const MatrixXd y =
        forward_eval_until(net, inputs.middleCols(start, n), net.spec.layers.size() - 1);
    for (Index s = 0; s < n; ++s) out.push_back(y(1, s) > y(0, s) ? 1 : 0);
  }
  return out;
}

MatrixXd extract_features(const TrainedNetwork& net, const Eigen::Ref<const MatrixXd>& inputs,
                          Index chunk) {
  check_input(net.spec, inputs.rows());
  const std::size_t layer = net.spec.feature_layer();
  MatrixXd features(inputs.cols(), net.spec.layers[layer].units);
  for (Index start = 0; start < inputs.cols(); start += chunk) {
    const Index n = std::min(chunk, inputs.cols() - start);
    features.middleRows(start, n) =
        forward_eval_until(net, inputs.middleCols(start, n), layer).transpose();
  }
  return features;
}

OptimizerSpec OptimizerSpec::sgd(double learning_rate, int batch_size) {
  OptimizerSpec s;
  s.kind = OptimizerKind::Sgd;
  s.learning_rate = learning_rate;
  s.batch_size = batch_size;
  return s;
}

OptimizerSpec OptimizerSpec::rmsprop(double learning_rate, double rho, double epsilon,
                                     int batch_size) {
  OptimizerSpec s;
  s.kind = OptimizerKind::RmsProp;
  s.learning_rate = learning_rate;
  s.rho = rho;
  s.epsilon = epsilon;
  s.batch_size = batch_size;
  return s;
}

void OptimizerSpec::validate() const {
  if (!(learning_rate > 0.0)) throw Error(ErrorCode::InvalidSpec, "learning_rate must be > 0");
  if (batch_size < 1) throw Error(ErrorCode::InvalidSpec, "batch_size must be >= 1");
  if (kind == OptimizerKind::RmsProp) {
    if (!(rho > 0.0 && rho < 1.0)) throw Error(ErrorCode::InvalidSpec, "rho must be in (0,1)");
    if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidSpec, "epsilon must be > 0");
  }
}

std::string_view to_string(OptimizerKind kind) {
  return kind == OptimizerKind::Sgd ? "sgd" : "rmsprop";
}

OptimizerKind optimizer_kind_from_string(std::string_view s) {
  if (s == "sgd") return OptimizerKind::Sgd;
  if (s == "rmsprop") return OptimizerKind::RmsProp;
  throw Error(ErrorCode::InvalidSpec, "unknown optimizer '" + std::string(s) + "'");
}

void apply_update(const OptimizerSpec& spec, OptimizerState& state, ParameterSet& params,
                  const ParameterSet& gradients) {
  if (spec.kind == OptimizerKind::RmsProp && state.accumulators.size() != params.size()) {
    state.accumulators = zeros_like(params);
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i];
    const auto& g = gradients[i];
    if (p.weights.size() == 0) continue;
    if (spec.kind == OptimizerKind::Sgd) {
      p.weights -= spec.learning_rate * g.weights;
      p.bias -= spec.learning_rate * g.bias;
    } else {
      auto& a = state.accumulators[i];
      a.weights = spec.rho * a.weights + (1.0 - spec.rho) * g.weights.cwiseAbs2();
      a.bias = spec.rho * a.bias + (1.0 - spec.rho) * g.bias.cwiseAbs2();
      p.weights.array() -=
          spec.learning_rate * g.weights.array() / (a.weights.array().sqrt() + spec.epsilon);
      p.bias.array() -=
          spec.learning_rate * g.bias.array() / (a.bias.array().sqrt() + spec.epsilon);
    }
  }
  ++state.steps;
}

}  // namespace memprobe
