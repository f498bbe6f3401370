#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "ammfm/model.hpp"
#include "ammfm/predictions.hpp"
#include "ammfm/schema.hpp"
#include "ammfm/tensor.hpp"

namespace ammfm::training {

/// How per-case losses combine over a batch. Sum matches the double sum over
/// cases and tasks; Mean divides it by the batch size.
enum class Reduction { Sum, Mean };

std::string_view to_string(Reduction reduction) noexcept;
Reduction parse_reduction(std::string_view text);

struct LossBreakdown {
  double dermoscopy = 0.0;
  double clinical = 0.0;
  double fusion = 0.0;
  double total = 0.0;

  LossBreakdown& operator+=(const LossBreakdown& other) noexcept;
};

/// Differentiable three-branch loss for one case.
struct CaseLoss {
  Tensor total;  // scalar; L_derm + L_clic + L_fusion
  LossBreakdown breakdown;
};

/// Sum over tasks of the cross-entropy of each branch's logits.
/// Throws ValidationError naming `case_id` and the task on a bad label.
CaseLoss case_loss(const model::ForwardResult& forward, const data::LabelVector& labels,
                   const data::TaskSchema& schema, std::string_view case_id = "");

/// Value-level loss of probability predictions over a batch. Each branch
/// loss is the sum over cases and tasks of -log p[label]; Mean divides each
/// branch by the batch size.
LossBreakdown total_loss(const std::vector<PredictionSet>& predictions,
                         const std::vector<data::LabelVector>& labels,
                         const data::TaskSchema& schema, Reduction reduction = Reduction::Sum);

}  // namespace ammfm::training
