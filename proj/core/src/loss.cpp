#include "ammfm/loss.hpp"

#include <cmath>
#include <string>

#include "ammfm/errors.hpp"
#include "ammfm/ops.hpp"

namespace ammfm::training {
namespace {

void check_labels(const data::LabelVector& labels, const data::TaskSchema& schema,
                  std::string_view case_id) {
  for (std::size_t t = 0; t < schema.task_count(); ++t) {
    if (labels[t] >= schema.category_count(t)) {
      throw ValidationError("case '" + std::string(case_id) + "' task " + schema.task(t).abbrev +
                            ": label " + std::to_string(labels[t]) + " outside " +
                            std::to_string(schema.category_count(t)) + " categories");
    }
  }
}

}  // namespace

std::string_view to_string(Reduction reduction) noexcept {
  return reduction == Reduction::Sum ? "sum" : "mean";
}

Reduction parse_reduction(std::string_view text) {
  if (text == "sum") return Reduction::Sum;
  if (text == "mean") return Reduction::Mean;
  throw ConfigError("unknown reduction '" + std::string(text) + "' (expected sum or mean)");
}

LossBreakdown& LossBreakdown::operator+=(const LossBreakdown& other) noexcept {
  dermoscopy += other.dermoscopy;
  clinical += other.clinical;
  fusion += other.fusion;
  total += other.total;
  return *this;
}

CaseLoss case_loss(const model::ForwardResult& forward, const data::LabelVector& labels,
                   const data::TaskSchema& schema, std::string_view case_id) {
  check_labels(labels, schema, case_id);
  std::array<Tensor, 3> branch;
  for (std::size_t b = 0; b < 3; ++b) {
    const auto& logits = forward.logits[b];
    Tensor acc = ops::cross_entropy(logits[0], labels[0]);
    for (std::size_t t = 1; t < schema.task_count(); ++t) {
      acc = ops::add(acc, ops::cross_entropy(logits[t], labels[t]));
    }
    branch[b] = acc;
  }
  CaseLoss out;
  // kBranches order: clinical, dermoscopy, fusion.
  out.breakdown.clinical = branch[0].item();
  out.breakdown.dermoscopy = branch[1].item();
  out.breakdown.fusion = branch[2].item();
  out.total = ops::add(ops::add(branch[1], branch[0]), branch[2]);
  out.breakdown.total = out.total.item();
  return out;
}

LossBreakdown total_loss(const std::vector<PredictionSet>& predictions,
                         const std::vector<data::LabelVector>& labels,
                         const data::TaskSchema& schema, Reduction reduction) {
  if (predictions.size() != labels.size()) {
    throw DimensionError("total_loss: " + std::to_string(predictions.size()) +
                         " predictions but " + std::to_string(labels.size()) + " label vectors");
  }
  LossBreakdown out;
  for (std::size_t j = 0; j < predictions.size(); ++j) {
    check_labels(labels[j], schema, "#" + std::to_string(j));
    const auto& p = predictions[j];
    for (std::size_t t = 0; t < schema.task_count(); ++t) {
      out.clinical -= std::log(p.clinical.at(t).at(labels[j][t]));
      out.dermoscopy -= std::log(p.dermoscopy.at(t).at(labels[j][t]));
      out.fusion -= std::log(p.fusion.at(t).at(labels[j][t]));
    }
  }
  if (reduction == Reduction::Mean && !predictions.empty()) {
    const auto n = static_cast<double>(predictions.size());
    out.clinical /= n;
    out.dermoscopy /= n;
    out.fusion /= n;
  }
  out.total = out.dermoscopy + out.clinical + out.fusion;
  return out;
}

}  // namespace ammfm::training
