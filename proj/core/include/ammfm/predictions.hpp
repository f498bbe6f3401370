#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "ammfm/schema.hpp"

namespace ammfm {

enum class Branch { Clinical, Dermoscopy, Fusion };

inline constexpr std::array<Branch, 3> kBranches{Branch::Clinical, Branch::Dermoscopy,
                                                 Branch::Fusion};

std::string_view to_string(Branch branch) noexcept;
Branch parse_branch(std::string_view text);

/// One probability vector per task.
using TaskProbabilities = std::vector<std::vector<double>>;

/// Per-branch, per-task category probabilities for one case.
struct PredictionSet {
  TaskProbabilities clinical;
  TaskProbabilities dermoscopy;
  TaskProbabilities fusion;

  [[nodiscard]] const TaskProbabilities& branch(Branch b) const;
  TaskProbabilities& branch(Branch b);

  friend bool operator==(const PredictionSet&, const PredictionSet&) = default;
};

/// Index of the largest probability; ties resolve to the lowest index.
std::size_t argmax(const std::vector<double>& probs);

/// Prediction dump row: (case_id, branch, task, category, probability).
struct CasePredictions {
  std::string case_id;
  PredictionSet predictions;
};

void write_prediction_dump(const std::filesystem::path& path,
                           const std::vector<CasePredictions>& cases,
                           const data::TaskSchema& schema = data::TaskSchema::spc());
std::vector<CasePredictions> read_prediction_dump(
    const std::filesystem::path& path, const data::TaskSchema& schema = data::TaskSchema::spc());

}  // namespace ammfm
