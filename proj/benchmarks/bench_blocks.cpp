#include <benchmark/benchmark.h>

#include "ammfm/blocks.hpp"
#include "ammfm/ops.hpp"

namespace {

using ammfm::Tensor;

Tensor feature_map(std::size_t side, std::size_t channels, std::uint64_t seed) {
  ammfm::Rng rng(seed);
  std::vector<double> v(side * side * channels);
  for (auto& x : v) x = rng.normal();
  return {ammfm::Shape{side, side, channels}, std::move(v), true};
}

void BM_AabForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  const auto clin = feature_map(side, c, 1);
  const auto derm = feature_map(side, c, 2);
  const auto params = ammfm::blocks::AttentionParams::init(c, ammfm::Rng(3), false);
  ammfm::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(ammfm::blocks::aab_forward(clin, derm, params));
}
BENCHMARK(BM_AabForward)->Args({4, 24})->Args({8, 12})->Args({16, 8});

void BM_AabBackward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  const auto clin = feature_map(side, c, 1);
  const auto derm = feature_map(side, c, 2);
  const auto params = ammfm::blocks::AttentionParams::init(c, ammfm::Rng(3), false);
  for (auto _ : state) {
    auto loss = ammfm::ops::sum(ammfm::blocks::aab_forward(clin, derm, params).refined);
    loss.backward();
  }
}
BENCHMARK(BM_AabBackward)->Args({4, 24})->Args({8, 12});

void BM_BabForward(benchmark::State& state) {
  const auto side = static_cast<std::size_t>(state.range(0));
  const auto c = static_cast<std::size_t>(state.range(1));
  const auto clin = feature_map(side, c, 1);
  const auto derm = feature_map(side, c, 2);
  const auto params = ammfm::blocks::BabParams::init(c, ammfm::Rng(3), false);
  ammfm::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(ammfm::blocks::bab_forward(clin, derm, params));
}
BENCHMARK(BM_BabForward)->Args({4, 24})->Args({8, 12});

}  // namespace
