#include "memprobe/selftest.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <functional>

#include "memprobe/checkpoint.hpp"
#include "memprobe/diagnosis.hpp"
#include "memprobe/forest.hpp"
#include "memprobe/idx.hpp"
#include "memprobe/network.hpp"
#include "memprobe/perm_null.hpp"
#include "memprobe/perturbation.hpp"
#include "memprobe/rng.hpp"

namespace memprobe {

namespace {

using Check = std::function<std::string()>;  // empty string on success

std::string idx_round_trip() {
  IdxData d;
  d.count = 3;
  d.rows = 2;
  d.cols = 2;
  d.pixels = {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 255};
  d.labels = {1, 0, 9};
  const IdxBytes b = serialize_idx(d);
  const IdxData back = parse_idx(gzip(b.images), b.labels);
  if (back.pixels != d.pixels || back.labels != d.labels) return "round trip changed the data";
  return {};
}

std::string perturbation_keeps_values() {
  ImageDataset ds = balanced_noise_dataset(4, 28, 28, 11);
  const SValidationSet s = make_s_validation(ds, 0.05, 7);
  for (std::size_t i = 0; i < ds.count; ++i) {
    auto a = std::vector<double>(ds.image(i).begin(), ds.image(i).end());
    auto b = std::vector<double>(s.images.image(i).begin(), s.images.image(i).end());
    std::size_t moved = 0;
    for (std::size_t p = 0; p < a.size(); ++p) moved += a[p] != b[p];
    if (moved > shuffled_pixel_count(0.05, 784)) return "more pixels moved than selected";
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) return fmt::format("image {} lost its value multiset", i);
  }
  if (shuffled_pixel_count(0.05, 784) != 39) return "5% of 784 is not 39";
  return {};
}

std::string mlp2_parameter_count() {
  const auto n = init_network(preset("mlp2"), 1).parameter_count();
  const std::size_t expected = 784 * 256 + 256 + 256 * 16 + 16 + 16 * 2 + 2;
  return n == expected ? std::string{} : fmt::format("got {}, expected {}", n, expected);
}

std::string gradient_matches_finite_difference() {
  NetworkSpec spec;
  spec.input_height = 3;
  spec.input_width = 3;
  spec.layers = {LayerSpec::conv2d(2, 2, 2, Activation::Relu), LayerSpec::flatten(),
                 LayerSpec::dense(3, Activation::Sigmoid), LayerSpec::dense(2, Activation::Sigmoid)};
  TrainedNetwork net = init_network(spec, 3);
  Rng rng(5);
  Eigen::MatrixXd x(9, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
  const std::vector<int> y = {0, 1, 1, 0};
  const auto g = loss_and_gradients(net, x, y, Mode::Eval);
  double worst = 0.0;
  for (std::size_t l = 0; l < net.params.size(); ++l) {
    auto& w = net.params[l].weights;
    for (Eigen::Index i = 0; i < w.size(); ++i) {
      const double keep = w.data()[i];
      const double h = 1e-6;
      w.data()[i] = keep + h;
      const double up = loss_value(net, x, y);
      w.data()[i] = keep - h;
      const double down = loss_value(net, x, y);
      w.data()[i] = keep;
      worst = std::max(worst, std::abs((up - down) / (2 * h) - g.gradients[l].weights.data()[i]));
    }
  }
  return worst < 1e-6 ? std::string{} : fmt::format("max deviation {:.3g}", worst);
}

std::string forest_separates_line() {
  Eigen::MatrixXd x(40, 1);
  std::vector<int> y(40);
  for (int i = 0; i < 40; ++i) {
    x(i, 0) = i;
    y[static_cast<std::size_t>(i)] = i >= 20;
  }
  ForestParams p;
  p.n_trees = 25;
  p.seed = 9;
  const Forest f = fit_forest(x, y, p);
  const double acc = accuracy(predict(f, x), y);
  return acc == 1.0 ? std::string{} : fmt::format("training accuracy {}", acc);
}

std::string p_value_and_baseline() {
  const std::vector<double> null(99, 0.5);
  if (std::abs(empirical_p_value(null, 0.9) - 0.01) > 1e-12) return "p-value above the null";
  if (std::abs(empirical_p_value(null, 0.5) - 1.0) > 1e-12) return "p-value at a tie";
  const std::vector<int> labels = {0, 1, 0, 1, 1, 0};
  if (std::abs(baseline_guess(labels) - 0.5) > 1e-12) return "balanced baseline";
  return {};
}

std::string verdict_rule() {
  NullDistribution n;
  n.baseline = 0.5;
  n.B = 20;
  n.scores.assign(20, 0.6);
  n.observed = 0.95;
  if (classify_outcome(n).verdict != Verdict::LearnedAndMemorized) return "memorized+learned";
  n.scores.assign(20, 0.5);
  n.observed = 0.5;
  if (classify_outcome(n).verdict != Verdict::Neither) return "neither";
  return {};
}

std::string checkpoint_round_trip() {
  TrainedNetwork net = init_network(preset("mlp2"), 21);
  net.epoch = 4;
  const LoadedCheckpoint back = decode_checkpoint(encode_checkpoint(net, "tag"));
  for (std::size_t l = 0; l < net.params.size(); ++l) {
    if (net.params[l].weights != back.net.params[l].weights) return "weights differ";
  }
  return back.tag == "tag" && back.net.epoch == 4 ? std::string{} : "header differs";
}

}  // namespace

std::vector<SelfTestCheck> run_selftest() {
  const std::vector<std::pair<std::string, Check>> checks = {
      {"idx round trip", idx_round_trip},
      {"s-validation keeps pixel values", perturbation_keeps_values},
      {"mlp2 parameter count", mlp2_parameter_count},
      {"gradients match finite differences", gradient_matches_finite_difference},
      {"forest separates a line", forest_separates_line},
      {"p-value and baseline", p_value_and_baseline},
      {"verdict rule", verdict_rule},
      {"checkpoint round trip", checkpoint_round_trip},
  };
  std::vector<SelfTestCheck> out;
  for (const auto& [name, fn] : checks) {
    SelfTestCheck c{name, false, {}};
    try {
      c.detail = fn();
      c.passed = c.detail.empty();
    } catch (const std::exception& e) {
      c.detail = e.what();
    }
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace memprobe
