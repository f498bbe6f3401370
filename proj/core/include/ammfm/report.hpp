#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ammfm/metrics.hpp"
#include "ammfm/schema.hpp"

namespace ammfm::report {

/// A titled grid of optional numbers. The last column is AVG, the mean of the
/// present cells in the row; absent cells render as "-".
struct Table {
  std::string title;
  std::vector<std::string> row_header;  // e.g. {"Method"} or {"Metric", "Method"}
  std::vector<std::string> columns;     // data columns, without AVG
  std::vector<std::vector<std::string>> row_labels;
  std::vector<std::vector<std::optional<double>>> cells;
  std::vector<std::optional<double>> averages;

  void add_row(std::vector<std::string> labels, std::vector<std::optional<double>> values);
};

using NamedReport = std::pair<std::string, metrics::MetricsReport>;

/// Per-category AUC over the 17 non-absent categories.
Table auc_table(const std::vector<NamedReport>& rows,
                const data::TaskSchema& schema = data::TaskSchema::spc());
/// Per-task accuracy in the order PN BWV VS PIG STR DaG RS Diag.
Table accuracy_table(const std::vector<NamedReport>& rows,
                     const data::TaskSchema& schema = data::TaskSchema::spc());
/// AUC, PRE, SEN and SPE of the eight melanoma-related categories.
Table melanoma_table(const std::vector<NamedReport>& rows,
                     const data::TaskSchema& schema = data::TaskSchema::spc());

/// Values are printed with `digits` decimals.
std::string to_csv(const Table& table, int digits = 4);
std::string to_text(const Table& table, int digits = 4);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation; 0 for a single value
  std::size_t n = 0;
};

MeanStd mean_std(const std::vector<double>& values);
/// "0.8123±0.0040"
std::string format(const MeanStd& value, int digits = 4);

/// One line of the framework x block ablation.
struct AblationRow {
  std::string framework;
  std::string block;
  MeanStd avg_auc;
  MeanStd avg_acc;
  std::size_t params = 0;
};

/// Mean ± std over seeds.
std::string ablation_csv(const std::vector<AblationRow>& rows, int digits = 4);
std::string ablation_text(const std::vector<AblationRow>& rows, int digits = 4);

/// Long-form CSV of every metric: report,metric,column,value. Values use the
/// shortest round-trip decimal form; absent values are "-".
std::string metrics_csv(const std::vector<NamedReport>& reports,
                        const data::TaskSchema& schema = data::TaskSchema::spc());

}  // namespace ammfm::report
