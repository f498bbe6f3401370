#include "ammfm/fusion.hpp"

#include <charconv>
#include <cmath>

#include "ammfm/errors.hpp"
#include "ammfm/metrics.hpp"
#include "text.hpp"

namespace ammfm::fusion {

void FusionWeights::validate() const {
  for (double w : {dermoscopy, clinical, fusion}) {
    if (!std::isfinite(w) || w < 0.0) {
      throw ContractError("fusion weights must be finite and non-negative, got " + str());
    }
  }
  if (std::abs(dermoscopy + clinical + fusion - 1.0) > 1e-12) {
    throw ContractError("fusion weights must sum to 1, got " + str());
  }
}

FusionWeights FusionWeights::normalized(double dermoscopy, double clinical, double fusion) {
  for (double w : {dermoscopy, clinical, fusion}) {
    if (!std::isfinite(w) || w < 0.0) throw ContractError("fusion weights must be non-negative");
  }
  const double total = dermoscopy + clinical + fusion;
  if (!(total > 0.0)) throw ContractError("fusion weights must not all be zero");
  return {dermoscopy / total, clinical / total, fusion / total};
}

FusionWeights FusionWeights::parse(std::string_view text) {
  const auto cells = text::split(text, ',');
  if (cells.size() != 3) {
    throw ConfigError("fusion weights need three comma-separated values, got '" +
                      std::string(text) + "'");
  }
  double w[3];
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& s = cells[i];
    const auto res = std::from_chars(s.data(), s.data() + s.size(), w[i]);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw ConfigError("bad fusion weight '" + s + "'");
    }
  }
  try {
    return normalized(w[0], w[1], w[2]);
  } catch (const ContractError& e) {
    throw ConfigError(e.what());
  }
}

std::string FusionWeights::str() const {
  return text::format_real(dermoscopy) + "," + text::format_real(clinical) + "," +
         text::format_real(fusion);
}

TaskProbabilities weighted_fuse(const PredictionSet& p, const FusionWeights& w) {
  w.validate();
  TaskProbabilities out(p.dermoscopy.size());
  for (std::size_t t = 0; t < out.size(); ++t) {
    const auto& d = p.dermoscopy[t];
    const auto& c = p.clinical.at(t);
    const auto& f = p.fusion.at(t);
    if (c.size() != d.size() || f.size() != d.size()) {
      throw DimensionError("weighted_fuse: task " + std::to_string(t) +
                           " has mismatched category counts across branches");
    }
    out[t].resize(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) {
      out[t][k] = w.dermoscopy * d[k] + w.clinical * c[k] + w.fusion * f[k];
    }
  }
  return out;
}

std::vector<FusionWeights> simplex_grid(double step) {
  if (!(step > 0.0 && step <= 1.0)) {
    throw ContractError("weight search step must lie in (0, 1], got " + text::format_real(step));
  }
  const auto n = static_cast<std::size_t>(std::floor(1.0 / step + 1e-9));
  // When the step divides 1, points are i/n so the corners are exact.
  const bool exact = std::abs(static_cast<double>(n) * step - 1.0) < 1e-9;
  auto coord = [&](std::size_t i) {
    return exact ? static_cast<double>(i) / static_cast<double>(n)
                 : static_cast<double>(i) * step;
  };
  std::vector<FusionWeights> grid;
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t j = 0; i + j <= n; ++j) {
      const double a = coord(i);
      const double b = coord(j);
      double c = exact ? coord(n - i - j) : 1.0 - a - b;
      if (c < 0.0) c = 0.0;
      grid.push_back({a, b, c});
    }
  }
  return grid;
}

std::string_view to_string(SearchObjective objective) noexcept {
  return objective == SearchObjective::AvgAcc ? "avg_acc" : "avg_auc";
}

SearchObjective parse_objective(std::string_view text) {
  if (text == "avg_acc" || text == "acc") return SearchObjective::AvgAcc;
  if (text == "avg_auc" || text == "auc") return SearchObjective::AvgAuc;
  throw ConfigError("unknown search objective '" + std::string(text) + "'");
}

SearchResult weight_search(const std::vector<PredictionSet>& predictions,
                           const std::vector<data::LabelVector>& labels, double step,
                           SearchObjective objective, const data::TaskSchema& schema) {
  if (predictions.empty()) throw ContractError("weight_search: empty validation set");
  if (predictions.size() != labels.size()) {
    throw ContractError("weight_search: predictions and labels differ in length");
  }
  const auto grid = simplex_grid(step);
  SearchResult best;
  bool have = false;
  std::vector<TaskProbabilities> fused(predictions.size());
  for (const auto& w : grid) {
    // Grid points with rounding slack are renormalised before use.
    const auto wn = FusionWeights::normalized(w.dermoscopy, w.clinical, w.fusion);
    const auto& use = std::abs(w.dermoscopy + w.clinical + w.fusion - 1.0) <= 1e-12 ? w : wn;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
      fused[i] = weighted_fuse(predictions[i], use);
    }
    double score = 0.0;
    if (objective == SearchObjective::AvgAcc) {
      score = metrics::average_accuracy(fused, labels, schema);
    } else {
      score = metrics::evaluate(fused, labels, schema).avg_auc.value_or(0.0);
    }
    ++best.candidates;
    // Equal accuracies can differ in the last bit depending on how the
    // per-task means round; treat those as ties.
    if (!have || score > best.score + 1e-12) {
      best.weights = use;
      best.score = score;
      have = true;
    }
  }
  return best;
}

}  // namespace ammfm::fusion
