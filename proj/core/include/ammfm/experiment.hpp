#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ammfm/augment.hpp"
#include "ammfm/dataset.hpp"
#include "ammfm/fusion.hpp"
#include "ammfm/metrics.hpp"
#include "ammfm/model.hpp"
#include "ammfm/trainer.hpp"

/// Train-evaluate pipeline shared by the command line tool and the
/// acceptance suite.
namespace ammfm::experiment {

struct EvalConfig {
  std::vector<augment::TtaTransform> tta;  // empty: plain forward
  /// Fixed weights; when absent the weights are searched on validation.
  std::optional<fusion::FusionWeights> weights;
  double search_step = 0.1;
  fusion::SearchObjective objective = fusion::SearchObjective::AvgAcc;
};

struct BranchReports {
  metrics::MetricsReport clinical;
  metrics::MetricsReport dermoscopy;
  metrics::MetricsReport fusion;
  metrics::MetricsReport final_prediction;  // weighted P_FI

  /// Named in the order clinical, dermoscopy, fusion, final.
  [[nodiscard]] std::vector<std::pair<std::string, metrics::MetricsReport>> named() const;
};

struct EvalResult {
  fusion::FusionWeights weights;
  bool searched = false;
  std::size_t search_candidates = 0;
  BranchReports validation;
  BranchReports test;
  std::vector<CasePredictions> validation_predictions;
  std::vector<CasePredictions> test_predictions;
};

EvalResult evaluate_model(const model::Model& model, const data::Partition& partition,
                          const EvalConfig& config);

/// Writes predictions_{val,test}.csv, metrics_{val,test}.csv and report.txt.
/// Returns the path of the test metrics file.
std::filesystem::path write_evaluation(const std::filesystem::path& dir, const EvalResult& result,
                                       const data::TaskSchema& schema = data::TaskSchema::spc());

struct CellConfig {
  model::ModelConfig model;
  std::uint64_t seed = 0;
  training::TrainConfig train;
  EvalConfig eval;
};

struct CellResult {
  model::ParamAudit params;
  training::FitResult fit;
  EvalResult eval;
  /// Filled when an output directory was given.
  std::string checkpoint_hash;
  std::string metrics_hash;
};

/// Builds the model from `seed`, trains on the train split and evaluates.
/// With `out_dir`, writes checkpoint/, loss_trace.csv and evaluation files.
CellResult run_cell(const data::Partition& partition, const CellConfig& config,
                    const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace ammfm::experiment
