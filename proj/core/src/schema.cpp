#include "ammfm/schema.hpp"

#include <numeric>
#include <set>

#include "ammfm/errors.hpp"

namespace ammfm::data {

std::optional<std::size_t> Task::find(std::string_view code) const {
  for (std::size_t i = 0; i < categories.size(); ++i) {
    if (categories[i].abbrev == code) return i;
  }
  return std::nullopt;
}

std::vector<double> Task::reference_marginals() const {
  double total = 0.0;
  for (const auto& c : categories) total += static_cast<double>(c.reference_count);
  std::vector<double> p;
  p.reserve(categories.size());
  for (const auto& c : categories) p.push_back(static_cast<double>(c.reference_count) / total);
  return p;
}

const TaskSchema& TaskSchema::spc() {
  // Category counts as tabulated for the 1011-case SPC release. The VS row
  // sums to 1021 as published; marginals normalise by the row's own total.
  static const TaskSchema schema({
      {"Diagnosis", "Diag",
       {{"Basal Cell Carcinoma", "BCC", 42},
        {"Nevus", "NEV", 575},
        {"Melanoma", "MEL", 252},
        {"Miscellaneous", "MISC", 97},
        {"Seborrheic Keratosis", "SK", 45}}},
      {"Pigment Network", "PN",
       {{"Absent", "ABS", 400}, {"Typical", "TYP", 381}, {"Atypical", "ATP", 230}}},
      {"Streaks", "STR", {{"Absent", "ABS", 653}, {"Regular", "REG", 107}, {"Irregular", "IR", 251}}},
      {"Pigmentation", "PIG",
       {{"Absent", "ABS", 588}, {"Regular", "REG", 118}, {"Irregular", "IR", 305}}},
      {"Regression Structures", "RS", {{"Absent", "ABS", 758}, {"Present", "PRS", 253}}},
      {"Dots and Globules", "DaG",
       {{"Absent", "ABS", 229}, {"Regular", "REG", 334}, {"Irregular", "IR", 448}}},
      {"Blue Whitish Veil", "BWV", {{"Absent", "ABS", 816}, {"Present", "PRS", 195}}},
      {"Vascular Structures", "VS",
       {{"Absent", "ABS", 833}, {"Regular", "REG", 117}, {"Irregular", "IR", 71}}},
  });
  return schema;
}

TaskSchema::TaskSchema(std::vector<Task> tasks) : tasks_(std::move(tasks)) {
  if (tasks_.size() != kTaskCount) {
    throw ConfigError("task schema needs exactly " + std::to_string(kTaskCount) + " tasks, got " +
                      std::to_string(tasks_.size()));
  }
  for (const auto& t : tasks_) {
    if (t.categories.size() < 2) throw ConfigError("task " + t.abbrev + " needs >= 2 categories");
    std::set<std::string> seen;
    for (const auto& c : t.categories) {
      if (!seen.insert(c.abbrev).second) {
        throw ConfigError("task " + t.abbrev + " repeats category " + c.abbrev);
      }
    }
  }
}

std::size_t TaskSchema::total_categories() const noexcept {
  std::size_t n = 0;
  for (const auto& t : tasks_) n += t.size();
  return n;
}

std::size_t TaskSchema::category_offset(std::size_t task) const {
  std::size_t offset = 0;
  for (std::size_t i = 0; i < task; ++i) offset += tasks_.at(i).size();
  return offset;
}

std::optional<std::size_t> TaskSchema::find_task(std::string_view code) const {
  for (std::size_t i = 0; i < tasks_.size(); ++i) {
    if (tasks_[i].abbrev == code) return i;
  }
  return std::nullopt;
}

void TaskSchema::validate(const LabelVector& labels) const {
  for (std::size_t t = 0; t < tasks_.size(); ++t) {
    if (labels[t] >= tasks_[t].size()) {
      throw ValidationError("task " + tasks_[t].abbrev + ": label " + std::to_string(labels[t]) +
                            " outside [0, " + std::to_string(tasks_[t].size()) + ")");
    }
  }
}

std::vector<CategoryRef> TaskSchema::auc_columns() const {
  std::vector<CategoryRef> cols;
  for (std::size_t t = 0; t < tasks_.size(); ++t) {
    for (std::size_t c = 0; c < tasks_[t].size(); ++c) {
      if (tasks_[t].categories[c].abbrev != "ABS") cols.push_back({t, c});
    }
  }
  return cols;
}

std::vector<std::size_t> TaskSchema::accuracy_columns() const {
  std::vector<std::size_t> cols;
  for (const char* code : {"PN", "BWV", "VS", "PIG", "STR", "DaG", "RS", "Diag"}) {
    if (auto t = find_task(code)) cols.push_back(*t);
  }
  if (cols.size() != tasks_.size()) {
    cols.resize(tasks_.size());
    std::iota(cols.begin(), cols.end(), std::size_t{0});
  }
  return cols;
}

std::vector<CategoryRef> TaskSchema::melanoma_columns() const {
  const std::pair<const char*, const char*> wanted[] = {
      {"Diag", "MEL"}, {"PN", "ATP"}, {"STR", "IR"},  {"PIG", "IR"},
      {"RS", "PRS"},   {"DaG", "IR"}, {"BWV", "PRS"}, {"VS", "IR"}};
  std::vector<CategoryRef> cols;
  for (const auto& [task, cat] : wanted) {
    const auto t = find_task(task);
    if (!t) continue;
    if (const auto c = tasks_[*t].find(cat)) cols.push_back({*t, *c});
  }
  return cols;
}

std::string TaskSchema::column_label(CategoryRef ref) const {
  const auto& t = tasks_.at(ref.task);
  return t.abbrev + "-" + t.categories.at(ref.category).abbrev;
}

}  // namespace ammfm::data
