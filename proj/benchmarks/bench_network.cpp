#include <benchmark/benchmark.h>

#include "memprobe/dataset.hpp"
#include "memprobe/network.hpp"
#include "memprobe/trainer.hpp"

namespace {

using namespace memprobe;

void BM_TrainEpoch(benchmark::State& state, const char* name) {
  const ImageDataset data = balanced_noise_dataset(1000, 28, 28, 1);
  TrainedNetwork net = init_network(preset(name), 2);
  const auto opt = OptimizerSpec::sgd();
  for (auto _ : state) {
    net = train(net, data, opt, net.epoch + 1, std::vector<std::int64_t>{net.epoch + 1}, 3)
              .back();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(data.count));
}
BENCHMARK_CAPTURE(BM_TrainEpoch, mlp2, "mlp2")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainEpoch, mlp2_dropout, "mlp2_dropout")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainEpoch, mlp4, "mlp4")->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_TrainEpoch, cnn, "cnn")->Unit(benchmark::kMillisecond)->Iterations(1);

void BM_ExtractFeatures(benchmark::State& state) {
  const ImageDataset data = balanced_noise_dataset(1000, 28, 28, 1);
  const TrainedNetwork net = init_network(preset("mlp2"), 2);
  for (auto _ : state) benchmark::DoNotOptimize(extract_features(net, data.as_matrix()));
}
BENCHMARK(BM_ExtractFeatures)->Unit(benchmark::kMillisecond);

}  // namespace
