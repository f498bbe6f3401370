#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ammfm/predictions.hpp"
#include "ammfm/schema.hpp"

namespace ammfm::metrics {

/// One-vs-rest AUC by the rank-sum method with midranks for ties. Equals
/// P(score+ > score-) + P(tie) / 2. Absent when either class is empty.
std::optional<double> auc_one_vs_rest(std::span<const double> scores,
                                      std::span<const bool> positive);

/// O(n^2) pairwise form of the same statistic; reference for tests.
std::optional<double> auc_pairwise(std::span<const double> scores, std::span<const bool> positive);

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;
};

ConfusionCounts confusion_counts(std::span<const std::size_t> predicted,
                                 std::span<const std::size_t> truth, std::size_t category);

struct CategoryMetrics {
  std::optional<double> auc;
  std::optional<double> precision;    // TP / (TP + FP)
  std::optional<double> sensitivity;  // TP / (TP + FN)
  std::optional<double> specificity;  // TN / (TN + FP)
};

/// PRE, SEN and SPE from counts; a zero denominator leaves the value absent.
CategoryMetrics confusion_metrics(const ConfusionCounts& counts);
CategoryMetrics confusion_metrics(std::span<const std::size_t> predicted,
                                  std::span<const std::size_t> truth, std::size_t category);

/// Exact-match rate. Throws ContractError on empty input and DimensionError
/// on a length mismatch.
double task_accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

struct MetricsReport {
  /// categories[task][category]
  std::vector<std::vector<CategoryMetrics>> categories;
  std::vector<double> task_accuracy;
  /// Mean over the AUC columns that are present.
  std::optional<double> avg_auc;
  double avg_acc = 0.0;
  /// Human-readable notes about absent metrics.
  std::vector<std::string> warnings;

  [[nodiscard]] const CategoryMetrics& at(data::CategoryRef ref) const {
    return categories.at(ref.task).at(ref.category);
  }
  /// True if any present value is NaN.
  [[nodiscard]] bool has_nan() const;
};

/// Metrics of per-case task probabilities against labels.
MetricsReport evaluate(const std::vector<TaskProbabilities>& probabilities,
                       const std::vector<data::LabelVector>& labels,
                       const data::TaskSchema& schema = data::TaskSchema::spc());

/// AVG ACC only; cheaper than a full report.
double average_accuracy(const std::vector<TaskProbabilities>& probabilities,
                        const std::vector<data::LabelVector>& labels,
                        const data::TaskSchema& schema = data::TaskSchema::spc());

}  // namespace ammfm::metrics
