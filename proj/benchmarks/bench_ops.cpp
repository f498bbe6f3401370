#include <benchmark/benchmark.h>

#include "ammfm/ops.hpp"
#include "ammfm/rng.hpp"

namespace {

ammfm::Tensor random_tensor(ammfm::Shape shape, std::uint64_t seed, bool grad = false) {
  ammfm::Rng rng(seed);
  std::vector<double> v(shape.numel());
  for (auto& x : v) x = rng.normal();
  return {std::move(shape), std::move(v), grad};
}

void BM_Conv3x3Forward(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  const auto x = random_tensor({size, size, channels}, 1);
  const auto w = random_tensor({3, 3, channels, channels}, 2);
  const auto b = random_tensor({channels}, 3);
  ammfm::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(ammfm::ops::conv3x3(x, w, b, 1));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(size * size));
}
BENCHMARK(BM_Conv3x3Forward)->Args({16, 8})->Args({8, 24})->Args({32, 8});

void BM_Conv3x3Backward(benchmark::State& state) {
  const auto size = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  const auto x = random_tensor({size, size, channels}, 1, true);
  const auto w = random_tensor({3, 3, channels, channels}, 2, true);
  const auto b = random_tensor({channels}, 3, true);
  for (auto _ : state) {
    auto loss = ammfm::ops::sum(ammfm::ops::conv3x3(x, w, b, 1));
    loss.backward();
  }
}
BENCHMARK(BM_Conv3x3Backward)->Args({16, 8})->Args({8, 24});

void BM_MatmulSoftmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_tensor({n, 16}, 4);
  const auto b = random_tensor({16, n}, 5);
  ammfm::NoGradGuard no_grad;
  for (auto _ : state) {
    benchmark::DoNotOptimize(ammfm::ops::softmax(ammfm::ops::matmul(a, b)));
  }
}
BENCHMARK(BM_MatmulSoftmax)->Arg(16)->Arg(64)->Arg(256);

}  // namespace
