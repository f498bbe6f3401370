#include <benchmark/benchmark.h>

#include <memory>

#include "ammfm/fusion.hpp"
#include "ammfm/metrics.hpp"
#include "ammfm/rng.hpp"

namespace {


void fill(std::size_t n, std::vector<double>& scores, std::unique_ptr<bool[]>& labels) {
  ammfm::Rng rng(11);
  scores.resize(n);
  labels = std::make_unique<bool[]>(n);
  for (std::size_t i = 0; i < n; ++i) {
    // Coarse scores so ties are common.
    scores[i] = static_cast<double>(rng.below(20)) / 20.0;
    labels[i] = rng.bernoulli(0.3);
  }
}

void BM_AucRank(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores;
  std::unique_ptr<bool[]> labels;
  fill(n, scores, labels);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ammfm::metrics::auc_one_vs_rest(scores, {labels.get(), n}));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AucRank)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oNLogN);

void BM_AucPairwise(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> scores;
  std::unique_ptr<bool[]> labels;
  fill(n, scores, labels);
  for (auto _ : state) {
    benchmark::DoNotOptimize(ammfm::metrics::auc_pairwise(scores, {labels.get(), n}));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AucPairwise)->RangeMultiplier(4)->Range(64, 4096)->Complexity(benchmark::oNSquared);

void BM_WeightSearch(benchmark::State& state) {
  const auto& schema = ammfm::data::TaskSchema::spc();
  ammfm::Rng rng(5);
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<ammfm::PredictionSet> preds(n);
  std::vector<ammfm::data::LabelVector> labels(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (auto b : ammfm::kBranches) {
      auto& probs = preds[i].branch(b);
      probs.resize(schema.task_count());
      for (std::size_t t = 0; t < schema.task_count(); ++t) {
        std::vector<double> p(schema.category_count(t));
        double s = 0.0;
        for (auto& x : p) s += (x = rng.uniform() + 1e-3);
        for (auto& x : p) x /= s;
        probs[t] = std::move(p);
      }
    }
    for (std::size_t t = 0; t < schema.task_count(); ++t) {
      labels[i][t] = rng.below(schema.category_count(t));
    }
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(ammfm::fusion::weight_search(preds, labels, 0.1));
  }
}
BENCHMARK(BM_WeightSearch)->Arg(100)->Arg(400);

}  // namespace
BENCHMARK_MAIN();
