#include <benchmark/benchmark.h>

#include "memprobe/dataset.hpp"
#include "memprobe/perturbation.hpp"

namespace {

using namespace memprobe;

void BM_SValidation(benchmark::State& state) {
  const ImageDataset data = balanced_noise_dataset(1000, 28, 28, 1);
  const double fraction = static_cast<double>(state.range(0)) / 100.0;
  for (auto _ : state) benchmark::DoNotOptimize(make_s_validation(data, fraction, 2));
}
BENCHMARK(BM_SValidation)->Arg(1)->Arg(5)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
