#include <benchmark/benchmark.h>

#include "ammfm/loss.hpp"
#include "ammfm/model.hpp"

namespace {

using ammfm::model::Framework;
using ammfm::blocks::FusionBlock;

ammfm::Tensor image(std::size_t side, std::uint64_t seed) {
  ammfm::Rng rng(seed);
  std::vector<double> v(side * side * 3);
  for (auto& x : v) x = rng.uniform();
  return {ammfm::Shape{side, side, 3}, std::move(v)};
}

const ammfm::model::Model& cached(Framework fw, FusionBlock block) {
  static const auto sff_cat =
      ammfm::model::Model::build(ammfm::model::ModelConfig::make(Framework::Sff, FusionBlock::Cat), 0);
  static const auto aff_aab =
      ammfm::model::Model::build(ammfm::model::ModelConfig::make(Framework::Aff, FusionBlock::Aab), 0);
  static const auto aff_bab =
      ammfm::model::Model::build(ammfm::model::ModelConfig::make(Framework::Aff, FusionBlock::Bab), 0);
  if (fw == Framework::Sff) return sff_cat;
  return block == FusionBlock::Aab ? aff_aab : aff_bab;
}

template <Framework F, FusionBlock B>
void BM_Predict(benchmark::State& state) {
  const auto& model = cached(F, B);
  const auto clin = image(32, 1);
  const auto derm = image(32, 2);
  for (auto _ : state) benchmark::DoNotOptimize(model.predict(clin, derm));
}
BENCHMARK(BM_Predict<Framework::Sff, FusionBlock::Cat>)->Name("BM_Predict/sff-cat");
BENCHMARK(BM_Predict<Framework::Aff, FusionBlock::Aab>)->Name("BM_Predict/aff-aab");
BENCHMARK(BM_Predict<Framework::Aff, FusionBlock::Bab>)->Name("BM_Predict/aff-bab");

// One training case: forward, three-branch loss, backward.
template <Framework F, FusionBlock B>
void BM_TrainStep(benchmark::State& state) {
  const auto& model = cached(F, B);
  const auto clin = image(32, 1);
  const auto derm = image(32, 2);
  const ammfm::data::LabelVector labels{};
  for (auto _ : state) {
    const auto fwd = model.forward(clin, derm);
    const auto loss = ammfm::training::case_loss(fwd, labels, model.schema());
    loss.total.backward();
  }
  for (const auto& p : model.parameters()) {
    auto t = p.tensor;
    t.zero_grad();
  }
}
BENCHMARK(BM_TrainStep<Framework::Sff, FusionBlock::Cat>)->Name("BM_TrainStep/sff-cat");
BENCHMARK(BM_TrainStep<Framework::Aff, FusionBlock::Aab>)->Name("BM_TrainStep/aff-aab");

}  // namespace
