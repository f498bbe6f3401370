#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ammfm/predictions.hpp"
#include "ammfm/schema.hpp"

namespace ammfm::fusion {

/// Convex weights of the dermoscopy, clinical and fusion branches.
struct FusionWeights {
  double dermoscopy = 1.0;
  double clinical = 0.0;
  double fusion = 0.0;

  /// Throws ContractError on a negative or non-finite weight, or when the
  /// weights do not sum to 1 within 1e-12.
  void validate() const;
  /// Divides by the sum. Throws ContractError if negative or all zero.
  static FusionWeights normalized(double dermoscopy, double clinical, double fusion);
  /// "d,c,f" as accepted by the CLI.
  static FusionWeights parse(std::string_view text);
  [[nodiscard]] std::string str() const;

  friend bool operator==(const FusionWeights&, const FusionWeights&) = default;
};

/// P_FI = W_D * P_D + W_C * P_C + W_FU * P_FU per task.
TaskProbabilities weighted_fuse(const PredictionSet& predictions, const FusionWeights& weights);

/// Lattice points of the 2-simplex with spacing `step`, in lexicographic
/// order of (W_D, W_C, W_FU). 66 points at step 0.1.
std::vector<FusionWeights> simplex_grid(double step);

enum class SearchObjective { AvgAcc, AvgAuc };

std::string_view to_string(SearchObjective objective) noexcept;
SearchObjective parse_objective(std::string_view text);

struct SearchResult {
  FusionWeights weights;
  double score = 0.0;
  std::size_t candidates = 0;
};

/// Exhaustive search of simplex_grid(step) for the weights maximising the
/// objective of P_FI; ties go to the lexicographically smallest triple.
/// Throws ContractError on an empty set or a step outside (0, 1].
SearchResult weight_search(const std::vector<PredictionSet>& predictions,
                           const std::vector<data::LabelVector>& labels, double step = 0.1,
                           SearchObjective objective = SearchObjective::AvgAcc,
                           const data::TaskSchema& schema = data::TaskSchema::spc());

}  // namespace ammfm::fusion
