#include <benchmark/benchmark.h>

#include "samkit/data.hpp"
#include "samkit/optim.hpp"
#include "samkit/rng.hpp"

namespace {

samkit::Batch random_training_batch(std::size_t rows, std::uint64_t seed) {
  samkit::Rng rng(seed);
  samkit::Batch batch;
  batch.x = samkit::Array({rows, 2});
  for (double& v : batch.x.data) v = rng.normal();
  batch.labels.resize(rows);
  for (int& l : batch.labels) l = static_cast<int>(rng.below(3));
  return batch;
}

void BM_SamStep(benchmark::State& state) {
  const auto kind = static_cast<samkit::PerturbKind>(state.range(0));
  samkit::Mlp model({2, {32, 32}, 3, 7});
  samkit::SgdState sgd;
  sgd.lr = 0.01;
  const samkit::PerturbStrategy strategy{kind, samkit::default_rho(kind)};
  const samkit::Batch batch = random_training_batch(64, 17);
  for (auto _ : state) {
    benchmark::DoNotOptimize(samkit::sam_step(model, batch, strategy, sgd));
  }
}

void BM_GenEpsilon(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  samkit::Rng rng(23);
  std::vector<double> grad(n);
  for (double& g : grad) g = rng.normal();
  const samkit::PerturbStrategy strategy{samkit::PerturbKind::AaceRaw, 0.2};
  for (auto _ : state) {
    benchmark::DoNotOptimize(samkit::gen_epsilon(strategy, grad));
  }
}

}  // namespace

BENCHMARK(BM_SamStep)
    ->Arg(static_cast<int>(samkit::PerturbKind::None))
    ->Arg(static_cast<int>(samkit::PerturbKind::SamCeNorm))
    ->Arg(static_cast<int>(samkit::PerturbKind::AaceRaw));
BENCHMARK(BM_GenEpsilon)->Arg(1251)->Arg(100000);
