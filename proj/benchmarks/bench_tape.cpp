#include <benchmark/benchmark.h>

#include "samkit/loss.hpp"
#include "samkit/mlp.hpp"
#include "samkit/rng.hpp"

namespace {

samkit::Array random_batch(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  samkit::Rng rng(seed);
  samkit::Array x({rows, cols});
  for (double& v : x.data) v = rng.normal();
  return x;
}

std::vector<int> random_labels(std::size_t rows, std::size_t classes, std::uint64_t seed) {
  samkit::Rng rng(seed);
  std::vector<int> labels(rows);
  for (int& l : labels) l = static_cast<int>(rng.below(classes));
  return labels;
}

void BM_ForwardBackward(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  samkit::Mlp model({2, {32, 32}, 3, 7});
  const samkit::Array x = random_batch(batch, 2, 11);
  const auto labels = random_labels(batch, 3, 13);
  for (auto _ : state) {
    model.params().reset_grads();
    samkit::Tape tape;
    samkit::Value logits = model.forward(tape, x);
    samkit::Value loss = samkit::batch_loss(tape, logits, samkit::ce_target_batch(labels, 3));
    tape.backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}

void BM_ForwardOnly(benchmark::State& state) {
  const std::size_t batch = static_cast<std::size_t>(state.range(0));
  samkit::Mlp model({2, {32, 32}, 3, 7});
  const samkit::Array x = random_batch(batch, 2, 11);
  for (auto _ : state) {
    samkit::Tape tape;
    samkit::Value logits = model.forward(tape, x);
    benchmark::DoNotOptimize(logits.data().data[0]);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(batch));
}

}  // namespace

BENCHMARK(BM_ForwardBackward)->Arg(16)->Arg(64)->Arg(256);
BENCHMARK(BM_ForwardOnly)->Arg(64)->Arg(256);
