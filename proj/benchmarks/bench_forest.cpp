#include <benchmark/benchmark.h>

#include "memprobe/forest.hpp"
#include "memprobe/perm_null.hpp"
#include "memprobe/rng.hpp"

namespace {

using namespace memprobe;

// Features shaped like a trained penultimate layer: 16 ReLU units, some dead.
Eigen::MatrixXd relu_features(Eigen::Index n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd x(n, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = std::max(0.0, rng.normal());
  return x;
}

std::vector<int> alternating(Eigen::Index n) {
  std::vector<int> y(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i % 2);
  return y;
}

void BM_FitForest(benchmark::State& state) {
  const auto n = state.range(0);
  const PresortedFeatures x(relu_features(n, 16, 1));
  const auto y = alternating(n);
  ForestParams p;
  p.n_trees = static_cast<int>(state.range(1));
  for (auto _ : state) {
    p.seed += 1;
    benchmark::DoNotOptimize(fit_forest(x, y, p));
  }
  state.SetItemsProcessed(state.iterations() * p.n_trees);
}
BENCHMARK(BM_FitForest)->Args({2000, 100})->Args({2000, 500})->Unit(benchmark::kMillisecond);

void BM_Presort(benchmark::State& state) {
  const auto x = relu_features(state.range(0), 16, 2);
  for (auto _ : state) benchmark::DoNotOptimize(PresortedFeatures(x));
}
BENCHMARK(BM_Presort)->Arg(2000)->Unit(benchmark::kMicrosecond);

void BM_PredictForest(benchmark::State& state) {
  const Eigen::MatrixXd x = relu_features(2000, 16, 3);
  ForestParams p;
  p.n_trees = 500;
  const Forest f = fit_forest(x, alternating(2000), p);
  for (auto _ : state) benchmark::DoNotOptimize(predict(f, x));
}
BENCHMARK(BM_PredictForest)->Unit(benchmark::kMillisecond);

void BM_NullScores(benchmark::State& state) {
  const auto n = 2000;
  ForestParams p;
  p.n_trees = 100;
  PermutationProbe probe(relu_features(n, 16, 4), alternating(n), p, 5);
  const Eigen::MatrixXd target = relu_features(n, 16, 6);
  const Eigen::MatrixXd* targets[] = {&target};
  for (auto _ : state) benchmark::DoNotOptimize(probe.null_scores(targets, 5));
}
BENCHMARK(BM_NullScores)->Unit(benchmark::kMillisecond);

}  // namespace
