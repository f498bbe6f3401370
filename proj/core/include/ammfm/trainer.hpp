#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <vector>

#include "ammfm/augment.hpp"
#include "ammfm/dataset.hpp"
#include "ammfm/loss.hpp"
#include "ammfm/model.hpp"
#include "ammfm/predictions.hpp"

namespace ammfm::training {

struct TrainConfig {
  std::size_t batch_size = 8;
  std::size_t epochs = 30;
  /// Fraction of final epochs whose end-of-epoch weights are averaged.
  double swa_window = 0.2;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  augment::AugmentConfig augment;
  Reduction reduction = Reduction::Mean;

  /// Throws ConfigError on invalid values.
  void validate() const;
  /// Number of averaged epochs: round(swa_window * epochs).
  [[nodiscard]] std::size_t swa_epochs() const;
};

/// Per-case mean branch losses over one epoch.
struct EpochLoss {
  std::size_t epoch = 0;
  LossBreakdown loss;
};

struct FitResult {
  std::vector<EpochLoss> trace;
  std::size_t optimizer_steps = 0;
  std::size_t swa_snapshots = 0;
};

using EpochCallback = std::function<void(const EpochLoss&)>;

/// Mini-batch Adam training with a seeded shuffle per epoch, optional
/// augmentation, and weight averaging over the final epochs. Gradients of a
/// batch are accumulated case by case in a fixed order.
/// Throws ConfigError on an empty training set.
FitResult fit(model::Model& model, const std::vector<data::CaseRecord>& train,
              const TrainConfig& config, const EpochCallback& on_epoch = {});

/// Element-wise mean of parameter snapshots, accumulated as a running mean.
/// Throws ContractError on an empty list or mismatched shapes.
std::vector<Tensor> swa_average(const std::vector<std::vector<Tensor>>& snapshots);

/// Mean of the branch probabilities over `transforms` applied to both
/// images. An empty list means identity only.
PredictionSet tta_predict(const model::Model& model, const Tensor& clinical,
                          const Tensor& dermoscopy,
                          const std::vector<augment::TtaTransform>& transforms);

/// Predictions for every record, optionally with test-time augmentation.
std::vector<CasePredictions> predict_all(const model::Model& model,
                                         const std::vector<data::CaseRecord>& records,
                                         const std::vector<augment::TtaTransform>& transforms = {});

/// CSV columns: epoch, L_derm, L_clic, L_fusion, L_total.
void write_loss_trace(const std::filesystem::path& path, const std::vector<EpochLoss>& trace);

}  // namespace ammfm::training
