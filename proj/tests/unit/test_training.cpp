#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <fstream>

#include "ammfm/augment.hpp"
#include "ammfm/errors.hpp"
#include "ammfm/loss.hpp"
#include "ammfm/ops.hpp"
#include "ammfm/optim.hpp"
#include "ammfm/synth.hpp"
#include "ammfm/trainer.hpp"
#include "oracles.hpp"

namespace ammfm::training {
namespace {

using blocks::FusionBlock;
using model::Framework;
using model::Model;
using model::ModelConfig;

std::vector<double> vals(const Tensor& t) { return {t.values().begin(), t.values().end()}; }

// Closed form from the schema: sum over tasks of ln K_task.
double uniform_case_loss(const data::TaskSchema& schema) {
  double s = 0.0;
  for (std::size_t t = 0; t < schema.task_count(); ++t) {
    s += std::log(static_cast<double>(schema.category_count(t)));
  }
  return s;
}

PredictionSet uniform_predictions(const data::TaskSchema& schema) {
  PredictionSet p;
  for (auto b : kBranches) {
    for (std::size_t t = 0; t < schema.task_count(); ++t) {
      const auto k = schema.category_count(t);
      p.branch(b).emplace_back(k, 1.0 / static_cast<double>(k));
    }
  }
  return p;
}

std::vector<std::vector<double>> snapshot(const Model& m) {
  std::vector<std::vector<double>> out;
  for (const auto& p : m.parameters()) out.push_back(vals(p.tensor));
  return out;
}

std::vector<data::CaseRecord> small_dataset(std::size_t cases, std::uint64_t seed, std::size_t size = 16) {
  data::SynthConfig sc;
  sc.cases = cases;
  sc.image_size = size;
  sc.seed = seed;
  return data::synth_generate(sc);
}

ModelConfig small_config(FusionBlock block = FusionBlock::Aab) {
  auto c = ModelConfig::make(Framework::Aff, block);
  c.input_height = c.input_width = 16;
  return c;
}

TEST(Loss, UniformPredictionsClosedForm) {
  const auto& schema = data::TaskSchema::spc();
  const double expected = uniform_case_loss(schema);
  EXPECT_NEAR(expected, std::log(5.0) + 5 * std::log(3.0) + 2 * std::log(2.0), 1e-12);
  EXPECT_NEAR(expected, 8.49, 0.005);
  Rng rng(1);
  const auto labels = testing::random_labels(rng);
  const auto l = total_loss({uniform_predictions(schema)}, {labels}, schema);
  EXPECT_NEAR(l.dermoscopy, expected, 1e-9);
  EXPECT_NEAR(l.clinical, expected, 1e-9);
  EXPECT_NEAR(l.fusion, expected, 1e-9);
  EXPECT_NEAR(l.total, 3 * expected, 1e-9);
}

TEST(Loss, PointMassBranchIsZero) {
  const auto& schema = data::TaskSchema::spc();
  Rng rng(2);
  const auto labels = testing::random_labels(rng);
  auto p = uniform_predictions(schema);
  for (std::size_t t = 0; t < schema.task_count(); ++t) {
    std::fill(p.dermoscopy[t].begin(), p.dermoscopy[t].end(), 0.0);
    p.dermoscopy[t][labels[t]] = 1.0;
  }
  const auto l = total_loss({p}, {labels}, schema);
  EXPECT_EQ(l.dermoscopy, 0.0);
  EXPECT_NEAR(l.clinical, uniform_case_loss(schema), 1e-12);
}

TEST(Loss, AdditivityOnRandomBatches) {
  const auto& schema = data::TaskSchema::spc();
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<PredictionSet> preds;
    std::vector<data::LabelVector> labels;
    const auto n = 1 + rng.below(10);
    for (std::size_t i = 0; i < n; ++i) {
      preds.push_back(testing::random_predictions(rng));
      labels.push_back(testing::random_labels(rng));
    }
    for (auto red : {Reduction::Sum, Reduction::Mean}) {
      const auto l = total_loss(preds, labels, schema, red);
      EXPECT_EQ(l.total, l.dermoscopy + l.clinical + l.fusion);
      EXPECT_GE(l.dermoscopy, 0.0);
    }
  }
}

TEST(Loss, SumReductionDoublesWithDuplicatedBatch) {
  const auto& schema = data::TaskSchema::spc();
  Rng rng(4);
  std::vector<PredictionSet> preds;
  std::vector<data::LabelVector> labels;
  for (int i = 0; i < 5; ++i) {
    preds.push_back(testing::random_predictions(rng));
    labels.push_back(testing::random_labels(rng));
  }
  const auto once = total_loss(preds, labels, schema, Reduction::Sum);
  auto p2 = preds;
  auto l2 = labels;
  p2.insert(p2.end(), preds.begin(), preds.end());
  l2.insert(l2.end(), labels.begin(), labels.end());
  const auto twice = total_loss(p2, l2, schema, Reduction::Sum);
  EXPECT_NEAR(twice.dermoscopy, 2 * once.dermoscopy, 1e-12);
  EXPECT_NEAR(twice.clinical, 2 * once.clinical, 1e-12);
  EXPECT_NEAR(twice.fusion, 2 * once.fusion, 1e-12);
  const auto mean = total_loss(p2, l2, schema, Reduction::Mean);
  EXPECT_NEAR(mean.dermoscopy, once.dermoscopy / 5.0, 1e-12);
}

TEST(Loss, CaseLossMatchesValueLevelLoss) {
  const auto m = Model::build(small_config(), 5);
  const auto recs = small_dataset(1, 6);
  const auto fwd = m.forward(recs[0].clinical, recs[0].dermoscopy);
  const auto cl = case_loss(fwd, recs[0].labels, m.schema());
  const auto vl = total_loss({m.predict(recs[0].clinical, recs[0].dermoscopy)}, {recs[0].labels},
                             m.schema());
  EXPECT_NEAR(cl.breakdown.dermoscopy, vl.dermoscopy, 1e-12);
  EXPECT_NEAR(cl.breakdown.clinical, vl.clinical, 1e-12);
  EXPECT_NEAR(cl.breakdown.fusion, vl.fusion, 1e-12);
  EXPECT_NEAR(cl.total.item(), cl.breakdown.total, 1e-12);
}

TEST(Loss, BadLabelNamesCaseAndTask) {
  const auto m = Model::build(small_config(), 5);
  const auto recs = small_dataset(1, 6);
  auto labels = recs[0].labels;
  labels[4] = 2;  // RS has two categories
  try {
    (void)case_loss(m.forward(recs[0].clinical, recs[0].dermoscopy), labels, m.schema(), "c-17");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("c-17"), std::string::npos) << msg;
    EXPECT_NE(msg.find("RS"), std::string::npos) << msg;
  }
}

TEST(Adam, ZeroGradientLeavesParameters) {
  auto p = Tensor::parameter(Shape{3}, {1, -2, 3});
  Adam adam({p});
  adam.step();
  EXPECT_EQ(vals(p), (std::vector<double>{1, -2, 3}));
  EXPECT_EQ(adam.step_count(), 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  auto p = Tensor::parameter(Shape{3}, {0, 0, 0});
  Adam adam({p}, AdamConfig{0.01});
  const std::vector<double> g{0.5, -3.0, 1e-2};
  for (std::size_t i = 0; i < 3; ++i) p.mutable_grad()[i] = g[i];
  adam.step();
  // m_hat = g, v_hat = g^2 -> update = lr * g / (|g| + eps)
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_NEAR(p[i], -0.01 * g[i] / (std::abs(g[i]) + 1e-8), 1e-15);
    EXPECT_LT(p[i] * g[i], 0.0);
  }
}

TEST(Adam, RejectsNonLeafParameters) {
  auto p = Tensor::parameter(Shape{1}, {1});
  EXPECT_THROW(Adam({ops::scale(p, 2.0)}), ContractError);
  EXPECT_THROW(Adam({Tensor(Shape{1}, {1.0})}), ContractError);
}

TEST(Adam, IdenticalRunsIdenticalTrajectories) {
  auto run = [] {
    auto p = Tensor::parameter(Shape{2}, {1, 2});
    Adam adam({p});
    for (int i = 0; i < 5; ++i) {
      adam.zero_grad();
      ops::sum(ops::mul(p, p)).backward();
      adam.step();
    }
    return vals(p);
  };
  EXPECT_EQ(run(), run());
}

TEST(Swa, Examples) {
  auto t = [](std::vector<double> v) { return Tensor(Shape{v.size()}, v); };
  EXPECT_EQ(vals(swa_average({{t({1, 2})}})[0]), (std::vector<double>{1, 2}));
  EXPECT_EQ(vals(swa_average({{t({1, -2})}, {t({-1, 2})}})[0]), (std::vector<double>{0, 0}));
  EXPECT_NEAR(swa_average({{t({1})}, {t({2})}, {t({6})}})[0][0], 3.0, 1e-15);
  EXPECT_THROW((void)swa_average({}), ContractError);
  EXPECT_THROW((void)swa_average({{t({1})}, {t({1, 2})}}), ContractError);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.swa_window = 1.5;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.epochs = 250;
  c.swa_window = 0.2;
  EXPECT_EQ(c.swa_epochs(), 50u);
}

TEST(Fit, ZeroLearningRateIsNoOp) {
  auto m = Model::build(small_config(), 7);
  const auto before = snapshot(m);
  TrainConfig tc;
  tc.epochs = 1;
  tc.learning_rate = 0.0;
  tc.augment.flip = tc.augment.shift = tc.augment.scale = tc.augment.rotate = tc.augment.brighten = true;
  const auto r = fit(m, small_dataset(10, 8), tc);
  EXPECT_EQ(snapshot(m), before);
  EXPECT_EQ(r.optimizer_steps, 2u);
}

TEST(Fit, ZeroSwaWindowKeepsLastEpochWeights) {
  const auto data = small_dataset(12, 9);
  TrainConfig tc;
  tc.epochs = 2;
  tc.swa_window = 0.0;
  auto a = Model::build(small_config(), 10);
  const auto r = fit(a, data, tc);
  EXPECT_EQ(r.swa_snapshots, 0u);
  // Averaging over only the final epoch must give the same weights.
  auto b = Model::build(small_config(), 10);
  TrainConfig one = tc;
  one.swa_window = 0.4;  // round(0.8) = 1 epoch
  const auto rb = fit(b, data, one);
  EXPECT_EQ(rb.swa_snapshots, 1u);
  EXPECT_EQ(snapshot(a), snapshot(b));
}

TEST(Fit, SwaAveragesFinalEpochs) {
  const auto data = small_dataset(8, 11);
  TrainConfig tc;
  tc.epochs = 3;
  tc.swa_window = 0.0;
  std::vector<std::vector<std::vector<double>>> per_epoch;
  auto m = Model::build(small_config(), 12);
  // Reference weights at the end of each epoch, recorded from the callback.
  auto ref = Model::build(small_config(), 12);
  (void)fit(ref, data, tc, [&](const EpochLoss&) { per_epoch.push_back(snapshot(ref)); });
  tc.swa_window = 2.0 / 3.0;
  (void)fit(m, data, tc);
  const auto got = snapshot(m);
  for (std::size_t i = 0; i < got.size(); ++i) {
    for (std::size_t k = 0; k < got[i].size(); ++k) {
      EXPECT_NEAR(got[i][k], 0.5 * (per_epoch[1][i][k] + per_epoch[2][i][k]), 1e-15);
    }
  }
}

TEST(Fit, BitDeterministic) {
  const auto data = small_dataset(12, 13);
  TrainConfig tc;
  tc.epochs = 2;
  tc.augment.flip = tc.augment.shift = true;
  auto a = Model::build(small_config(FusionBlock::Bab), 14);
  auto b = Model::build(small_config(FusionBlock::Bab), 14);
  const auto ra = fit(a, data, tc);
  const auto rb = fit(b, data, tc);
  EXPECT_EQ(snapshot(a), snapshot(b));
  ASSERT_EQ(ra.trace.size(), rb.trace.size());
  for (std::size_t e = 0; e < ra.trace.size(); ++e) EXPECT_EQ(ra.trace[e].loss.total, rb.trace[e].loss.total);
}

TEST(Fit, EmptyTrainingSetRejected) {
  auto m = Model::build(small_config(), 0);
  EXPECT_THROW((void)fit(m, {}, TrainConfig{}), ConfigError);
}

// Reference run recorded as a fixture; also checks the trace settles.
TEST(Fit, LossTraceRegression) {
  const auto data = small_dataset(96, 21);
  TrainConfig tc;
  tc.epochs = 8;
  auto m = Model::build(small_config(), 22);
  const auto r = fit(m, data, tc);
  for (std::size_t e = 3; e < r.trace.size(); ++e) {
    EXPECT_LE(r.trace[e].loss.total, 1.05 * r.trace[e - 1].loss.total) << "epoch " << e + 1;
  }
  const auto fixture = std::filesystem::path(AMMFM_FIXTURE_DIR) / "loss_trace_reference.csv";
  if (std::getenv("AMMFM_UPDATE_FIXTURES") != nullptr) {
    write_loss_trace(fixture, r.trace);
    GTEST_SKIP() << "rewrote " << fixture;
  }
  std::ifstream in(fixture);
  ASSERT_TRUE(in) << "missing fixture";
  std::string line;
  std::getline(in, line);
  for (const auto& e : r.trace) {
    ASSERT_TRUE(std::getline(in, line));
    std::size_t epoch = 0;
    double ld = 0, lc = 0, lf = 0, lt = 0;
    ASSERT_EQ(std::sscanf(line.c_str(), "%zu,%lf,%lf,%lf,%lf", &epoch, &ld, &lc, &lf, &lt), 5);
    EXPECT_EQ(epoch, e.epoch);
    EXPECT_NEAR(e.loss.dermoscopy, ld, 1e-9 * ld);
    EXPECT_NEAR(e.loss.clinical, lc, 1e-9 * lc);
    EXPECT_NEAR(e.loss.fusion, lf, 1e-9 * lf);
    EXPECT_NEAR(e.loss.total, lt, 1e-9 * lt);
  }
}

TEST(LossTrace, CsvHeader) {
  testing::TempDir dir("trace");
  write_loss_trace(dir / "t.csv", {{1, {1, 2, 3, 6}}});
  const auto text = testing::read_file(dir / "t.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "epoch,L_derm,L_clic,L_fusion,L_total");
}

TEST(Tta, IdentityEqualsPlainForward) {
  const auto m = Model::build(small_config(), 15);
  const auto rec = small_dataset(1, 16)[0];
  EXPECT_EQ(tta_predict(m, rec.clinical, rec.dermoscopy, {augment::TtaTransform::Identity}),
            m.predict(rec.clinical, rec.dermoscopy));
}

TEST(Tta, FlipInvariantInputEqualsPlainForward) {
  const auto m = Model::build(small_config(), 17);
  // Constant images are invariant under both flips.
  const auto c = Tensor::full(Shape{16, 16, 3}, 0.3);
  const auto d = Tensor::full(Shape{16, 16, 3}, 0.6);
  const auto plain = m.predict(c, d);
  const auto tta = tta_predict(m, c, d, augment::default_tta());
  for (auto b : kBranches) {
    for (std::size_t t = 0; t < 8; ++t) {
      double s = 0.0;
      for (std::size_t k = 0; k < plain.branch(b)[t].size(); ++k) {
        EXPECT_NEAR(tta.branch(b)[t][k], plain.branch(b)[t][k], 1e-12);
        s += tta.branch(b)[t][k];
      }
      EXPECT_NEAR(s, 1.0, 1e-9);
    }
  }
}

TEST(Augment, FlipsAndRotations) {
  const Tensor x(Shape{2, 3, 1}, {1, 2, 3, 4, 5, 6});
  EXPECT_EQ(vals(augment::flip_horizontal(x)), (std::vector<double>{3, 2, 1, 6, 5, 4}));
  EXPECT_EQ(vals(augment::flip_vertical(x)), (std::vector<double>{4, 5, 6, 1, 2, 3}));
  const auto r = augment::rotate90(x, 1);
  EXPECT_EQ(r.shape(), (Shape{3, 2, 1}));
  // Counter-clockwise: the right column becomes the top row.
  EXPECT_EQ(vals(r), (std::vector<double>{3, 6, 2, 5, 1, 4}));
  EXPECT_EQ(vals(augment::rotate90(augment::rotate90(x, 1), 3)), vals(x));
  EXPECT_EQ(vals(augment::rotate90(x, 2)), vals(augment::flip_vertical(augment::flip_horizontal(x))));
}

TEST(Augment, ShiftScaleBrighten) {
  const Tensor x(Shape{2, 2, 1}, {1, 2, 3, 4});
  EXPECT_EQ(vals(augment::shift(x, 1, 0)), (std::vector<double>{0, 0, 1, 2}));
  EXPECT_EQ(vals(augment::shift(x, 0, -1)), (std::vector<double>{2, 0, 4, 0}));
  EXPECT_EQ(vals(augment::scale(x, 1.0)), vals(x));
  const Tensor y(Shape{1, 2, 1}, {0.5, 0.8});
  const auto b = augment::brighten(y, 1.5);
  EXPECT_DOUBLE_EQ(b[0], 0.75);
  EXPECT_EQ(b[1], 1.0);
}

TEST(Augment, PairStaysRegistered) {
  Rng rng(18);
  const auto img = testing::random_uniform(Shape{8, 8, 3}, rng, 0, 1);
  augment::AugmentConfig cfg;
  cfg.flip = cfg.shift = cfg.scale = cfg.rotate = true;
  cfg.probability = 1.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    const auto [a, b] = augment::augment_pair(img, img, cfg, Rng(k));
    EXPECT_EQ(vals(a), vals(b));
  }
  const auto [c, d] = augment::augment_pair(img, img, cfg, Rng(3));
  const auto [e, f] = augment::augment_pair(img, img, cfg, Rng(3));
  EXPECT_EQ(vals(c), vals(e));
}

TEST(Augment, TtaNamesRoundTrip) {
  for (auto t : {augment::TtaTransform::Identity, augment::TtaTransform::FlipHorizontal,
                 augment::TtaTransform::FlipVertical, augment::TtaTransform::Rotate90,
                 augment::TtaTransform::Rotate180, augment::TtaTransform::Rotate270}) {
    EXPECT_EQ(augment::parse_tta_transform(augment::to_string(t)), t);
  }
  EXPECT_THROW((void)augment::parse_tta_transform("mirror"), ConfigError);
}

}  // namespace
}  // namespace ammfm::training
