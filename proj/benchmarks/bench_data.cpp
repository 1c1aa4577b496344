#include <benchmark/benchmark.h>

#include "samkit/data.hpp"

namespace {

void BM_GenSpirals(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(samkit::gen_spirals(42, n, 3, 0.15));
  }
}

void BM_EpochBatches(benchmark::State& state) {
  const samkit::Dataset ds = samkit::gen_spirals(42, 500, 3, 0.15);
  std::uint64_t epoch = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(samkit::batches(ds, 64, epoch++));
  }
}

}  // namespace

BENCHMARK(BM_GenSpirals)->Arg(500)->Arg(5000);
BENCHMARK(BM_EpochBatches);

BENCHMARK_MAIN();
