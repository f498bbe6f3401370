#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ammfm/schema.hpp"
#include "ammfm/tensor.hpp"

namespace ammfm::data {

enum class Split { Train, Val, Test };

std::string_view to_string(Split split) noexcept;
/// "train", "val"/"valid"/"validation", "test"; empty text yields nullopt.
std::optional<Split> parse_split(std::string_view text);

/// One patient case: an aligned clinical/dermoscopy image pair (H x W x 3,
/// values in [0, 1]) with its eight task labels.
struct CaseRecord {
  std::string case_id;
  Tensor clinical;
  Tensor dermoscopy;
  LabelVector labels{};
  std::optional<Split> split;
  /// Image locations relative to the dataset root; filled by load/write.
  std::string clinical_path;
  std::string dermoscopy_path;
};

/// Header of the case index CSV.
inline constexpr std::string_view kIndexHeader =
    "case_id,clinical_path,derm_path,diag,pn,str,pig,rs,dag,bwv,vs,split";

struct LoadOptions {
  /// Directory image paths are relative to; defaults to the index's parent.
  std::optional<std::filesystem::path> root;
  bool load_images = true;
};

/// Reads and validates a case index. Category cells hold the category
/// abbreviation of the corresponding task (e.g. diag=NEV, pn=ABS).
/// Errors name the file, the row and, for label errors, the task.
std::vector<CaseRecord> load_index(const std::filesystem::path& index_csv,
                                   const TaskSchema& schema = TaskSchema::spc(),
                                   const LoadOptions& options = {});

/// Writes `root/index.csv` plus one tensor file per image under
/// `root/images/`. Records without paths get `images/<case_id>_{clin,derm}.bin`.
void write_dataset(const std::filesystem::path& root, const std::vector<CaseRecord>& records,
                   const TaskSchema& schema = TaskSchema::spc());

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct Partition {
  std::vector<CaseRecord> train;
  std::vector<CaseRecord> val;
  std::vector<CaseRecord> test;
};

/// Seeded shuffle then partition by `ratios`. When the records already carry
/// split tags those are used instead and the ratios are ignored.
/// Throws ConfigError if a partition would be empty.
Partition split(const std::vector<CaseRecord>& records, const SplitRatios& ratios,
                std::uint64_t seed);

/// Per-case label-majority accuracy achievable without image information:
/// the mean over tasks of the largest marginal probability.
double majority_rate(const std::vector<std::vector<double>>& marginals);

}  // namespace ammfm::data
