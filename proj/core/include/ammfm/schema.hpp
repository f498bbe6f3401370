#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ammfm::data {

inline constexpr std::size_t kTaskCount = 8;

struct Category {
  std::string name;
  std::string abbrev;
  /// Case count in the reference dataset; used for default label marginals.
  std::size_t reference_count = 0;
};

struct Task {
  std::string name;
  std::string abbrev;
  std::vector<Category> categories;

  [[nodiscard]] std::size_t size() const noexcept { return categories.size(); }
  [[nodiscard]] std::optional<std::size_t> find(std::string_view abbrev) const;
  /// Reference counts normalised to sum to one.
  [[nodiscard]] std::vector<double> reference_marginals() const;
};

/// One category index per task, in schema order.
using LabelVector = std::array<std::size_t, kTaskCount>;

/// (task, category) address used by the report tables.
struct CategoryRef {
  std::size_t task;
  std::size_t category;
  friend bool operator==(const CategoryRef&, const CategoryRef&) = default;
};

/// The seven-point-checklist label structure: diagnosis plus seven
/// dermoscopic criteria, each a categorical task.
class TaskSchema {
 public:
  /// Diag(5) PN(3) STR(3) PIG(3) RS(2) DaG(3) BWV(2) VS(3).
  static const TaskSchema& spc();

  explicit TaskSchema(std::vector<Task> tasks);

  [[nodiscard]] std::size_t task_count() const noexcept { return tasks_.size(); }
  [[nodiscard]] const Task& task(std::size_t i) const { return tasks_.at(i); }
  [[nodiscard]] const std::vector<Task>& tasks() const noexcept { return tasks_; }
  [[nodiscard]] std::size_t category_count(std::size_t task) const { return tasks_.at(task).size(); }
  [[nodiscard]] std::size_t total_categories() const noexcept;
  /// Offset of a task's first category in the flattened category list.
  [[nodiscard]] std::size_t category_offset(std::size_t task) const;
  [[nodiscard]] std::optional<std::size_t> find_task(std::string_view abbrev) const;
  /// Throws ValidationError naming the task when an index is out of range.
  void validate(const LabelVector& labels) const;

  /// Every category except "absent" ones: the 17 AUC columns.
  [[nodiscard]] std::vector<CategoryRef> auc_columns() const;
  /// Task order of the accuracy table: PN BWV VS PIG STR DaG RS Diag.
  [[nodiscard]] std::vector<std::size_t> accuracy_columns() const;
  /// Melanoma-related categories: MEL, PN-ATP, STR-IR, PIG-IR, RS-PRS,
  /// DaG-IR, BWV-PRS, VS-IR.
  [[nodiscard]] std::vector<CategoryRef> melanoma_columns() const;

  [[nodiscard]] std::string column_label(CategoryRef ref) const;

 private:
  std::vector<Task> tasks_;
};

}  // namespace ammfm::data
