#include "ammfm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numeric>

#include "ammfm/errors.hpp"

namespace ammfm::metrics {
namespace {

void check_lengths(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionError(std::string(what) + ": " + std::to_string(a) + " vs " +
                         std::to_string(b) + " entries");
  }
}

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace

std::optional<double> auc_one_vs_rest(std::span<const double> scores,
                                      std::span<const bool> positive) {
  check_lengths(scores.size(), positive.size(), "auc");
  const auto n = scores.size();
  const auto n_pos = static_cast<std::size_t>(std::count(positive.begin(), positive.end(), true));
  const auto n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Twice the positive rank sum keeps midranks integral.
  std::size_t twice_rank_sum = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const std::size_t twice_midrank = i + 1 + j;  // 2 * (i+1 + j) / 2
    for (std::size_t k = i; k < j; ++k) {
      if (positive[idx[k]]) twice_rank_sum += twice_midrank;
    }
    i = j;
  }
  const std::size_t twice_u = twice_rank_sum - n_pos * (n_pos + 1);
  return static_cast<double>(twice_u) / static_cast<double>(2 * n_pos * n_neg);
}

std::optional<double> auc_pairwise(std::span<const double> scores, std::span<const bool> positive) {
  check_lengths(scores.size(), positive.size(), "auc");
  std::size_t twice_wins = 0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      ++pairs;
      if (scores[i] > scores[j]) twice_wins += 2;
      else if (scores[i] == scores[j]) twice_wins += 1;
    }
  }
  if (pairs == 0) return std::nullopt;
  return static_cast<double>(twice_wins) / static_cast<double>(2 * pairs);
}

ConfusionCounts confusion_counts(std::span<const std::size_t> predicted,
                                 std::span<const std::size_t> truth, std::size_t category) {
  check_lengths(predicted.size(), truth.size(), "confusion");
  ConfusionCounts c;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const bool p = predicted[i] == category;
    const bool t = truth[i] == category;
    if (p && t) ++c.tp;
    else if (p) ++c.fp;
    else if (t) ++c.fn;
    else ++c.tn;
  }
  return c;
}

CategoryMetrics confusion_metrics(const ConfusionCounts& c) {
  CategoryMetrics m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.sensitivity = ratio(c.tp, c.tp + c.fn);
  m.specificity = ratio(c.tn, c.tn + c.fp);
  return m;
}

CategoryMetrics confusion_metrics(std::span<const std::size_t> predicted,
                                  std::span<const std::size_t> truth, std::size_t category) {
  return confusion_metrics(confusion_counts(predicted, truth, category));
}

double task_accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  check_lengths(predicted.size(), truth.size(), "accuracy");
  if (predicted.empty()) throw ContractError("accuracy: empty evaluation set");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

bool MetricsReport::has_nan() const {
  auto bad = [](const std::optional<double>& v) { return v && std::isnan(*v); };
  for (const auto& task : categories) {
    for (const auto& c : task) {
      if (bad(c.auc) || bad(c.precision) || bad(c.sensitivity) || bad(c.specificity)) return true;
    }
  }
  for (double a : task_accuracy) {
    if (std::isnan(a)) return true;
  }
  return bad(avg_auc) || std::isnan(avg_acc);
}

MetricsReport evaluate(const std::vector<TaskProbabilities>& probabilities,
                       const std::vector<data::LabelVector>& labels,
                       const data::TaskSchema& schema) {
  check_lengths(probabilities.size(), labels.size(), "evaluate");
  if (probabilities.empty()) throw ContractError("evaluate: empty evaluation set");
  const auto n = probabilities.size();
  MetricsReport r;
  r.categories.resize(schema.task_count());
  std::vector<std::size_t> pred(n), truth(n);
  std::vector<double> scores(n);
  std::unique_ptr<bool[]> positive(new bool[n]);
  for (std::size_t t = 0; t < schema.task_count(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      pred[i] = argmax(probabilities[i].at(t));
      truth[i] = labels[i][t];
    }
    r.task_accuracy.push_back(task_accuracy(pred, truth));
    for (std::size_t k = 0; k < schema.category_count(t); ++k) {
      auto m = confusion_metrics(pred, truth, k);
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = probabilities[i][t].at(k);
        positive[i] = truth[i] == k;
      }
      m.auc = auc_one_vs_rest(scores, std::span<const bool>(positive.get(), n));
      r.categories[t].push_back(m);
    }
  }
  double auc_sum = 0.0;
  std::size_t auc_n = 0;
  for (const auto& ref : schema.auc_columns()) {
    const auto& auc = r.at(ref).auc;
    if (auc) {
      auc_sum += *auc;
      ++auc_n;
    } else {
      r.warnings.push_back("AUC of " + schema.column_label(ref) +
                           " is undefined (single-class evaluation set); excluded from AVG AUC");
    }
  }
  if (auc_n > 0) r.avg_auc = auc_sum / static_cast<double>(auc_n);
  r.avg_acc = std::accumulate(r.task_accuracy.begin(), r.task_accuracy.end(), 0.0) /
              static_cast<double>(r.task_accuracy.size());
  return r;
}

double average_accuracy(const std::vector<TaskProbabilities>& probabilities,
                        const std::vector<data::LabelVector>& labels,
                        const data::TaskSchema& schema) {
  check_lengths(probabilities.size(), labels.size(), "average_accuracy");
  if (probabilities.empty()) throw ContractError("average_accuracy: empty evaluation set");
  double sum = 0.0;
  for (std::size_t t = 0; t < schema.task_count(); ++t) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < probabilities.size(); ++i) {
      hits += argmax(probabilities[i].at(t)) == labels[i][t];
    }
    sum += static_cast<double>(hits) / static_cast<double>(probabilities.size());
  }
  return sum / static_cast<double>(schema.task_count());
}

}  // namespace ammfm::metrics
