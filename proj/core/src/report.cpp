#include "ammfm/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "ammfm/errors.hpp"
#include "text.hpp"

namespace ammfm::report {
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string cell_text(const std::optional<double>& v, int digits) {
  return v ? fixed(*v, digits) : "-";
}

// Display columns of UTF-8 text (continuation bytes do not advance).
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(std::count_if(
      s.begin(), s.end(), [](char ch) { return (static_cast<unsigned char>(ch) & 0xC0) != 0x80; }));
}

std::string render_aligned(const std::vector<std::vector<std::string>>& grid,
                           std::size_t left_columns) {
  std::vector<std::size_t> width;
  for (const auto& row : grid) {
    width.resize(std::max(width.size(), row.size()), 0);
    for (std::size_t i = 0; i < row.size(); ++i) width[i] = std::max(width[i], display_width(row[i]));
  }
  std::ostringstream out;
  for (const auto& row : grid) {
    std::string line;
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i > 0) line += "  ";
      const auto pad = std::string(width[i] - display_width(row[i]), ' ');
      line += i < left_columns ? row[i] + pad : pad + row[i];
    }
    while (!line.empty() && line.back() == ' ') line.pop_back();
    out << line << '\n';
  }
  return out.str();
}

std::vector<std::vector<std::string>> table_grid(const Table& t, int digits) {
  std::vector<std::vector<std::string>> grid;
  auto header = t.row_header;
  header.insert(header.end(), t.columns.begin(), t.columns.end());
  header.push_back("AVG");
  grid.push_back(header);
  for (std::size_t r = 0; r < t.cells.size(); ++r) {
    auto row = t.row_labels[r];
    for (const auto& c : t.cells[r]) row.push_back(cell_text(c, digits));
    row.push_back(cell_text(t.averages[r], digits));
    grid.push_back(row);
  }
  return grid;
}

std::optional<double> pick(const metrics::CategoryMetrics& m, int which) {
  switch (which) {
    case 0: return m.auc;
    case 1: return m.precision;
    case 2: return m.sensitivity;
    default: return m.specificity;
  }
}

}  // namespace

void Table::add_row(std::vector<std::string> labels, std::vector<std::optional<double>> values) {
  if (values.size() != columns.size()) {
    throw DimensionError("report row has " + std::to_string(values.size()) + " cells for " +
                         std::to_string(columns.size()) + " columns");
  }
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& v : values) {
    if (v) {
      sum += *v;
      ++n;
    }
  }
  averages.push_back(n ? std::optional<double>(sum / static_cast<double>(n)) : std::nullopt);
  row_labels.push_back(std::move(labels));
  cells.push_back(std::move(values));
}

Table auc_table(const std::vector<NamedReport>& rows, const data::TaskSchema& schema) {
  Table t;
  t.title = "Per-category AUC";
  t.row_header = {"Method"};
  const auto refs = schema.auc_columns();
  for (const auto& ref : refs) t.columns.push_back(schema.column_label(ref));
  for (const auto& [name, report] : rows) {
    std::vector<std::optional<double>> values;
    for (const auto& ref : refs) values.push_back(report.at(ref).auc);
    t.add_row({name}, std::move(values));
  }
  return t;
}

Table accuracy_table(const std::vector<NamedReport>& rows, const data::TaskSchema& schema) {
  Table t;
  t.title = "Per-task accuracy";
  t.row_header = {"Method"};
  const auto tasks = schema.accuracy_columns();
  for (auto task : tasks) t.columns.push_back(schema.task(task).abbrev);
  for (const auto& [name, report] : rows) {
    std::vector<std::optional<double>> values;
    for (auto task : tasks) values.emplace_back(report.task_accuracy.at(task));
    t.add_row({name}, std::move(values));
  }
  return t;
}

Table melanoma_table(const std::vector<NamedReport>& rows, const data::TaskSchema& schema) {
  Table t;
  t.title = "Melanoma-related categories";
  t.row_header = {"Metric", "Method"};
  const auto refs = schema.melanoma_columns();
  for (const auto& ref : refs) t.columns.push_back(schema.column_label(ref));
  const char* names[] = {"AUC", "PRE", "SEN", "SPE"};
  for (int which = 0; which < 4; ++which) {
    for (const auto& [name, report] : rows) {
      std::vector<std::optional<double>> values;
      for (const auto& ref : refs) values.push_back(pick(report.at(ref), which));
      t.add_row({names[which], name}, std::move(values));
    }
  }
  return t;
}

std::string to_csv(const Table& table, int digits) {
  std::ostringstream out;
  for (const auto& row : table_grid(table, digits)) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << '\n';
  }
  return out.str();
}

std::string to_text(const Table& table, int digits) {
  return table.title + "\n" + render_aligned(table_grid(table, digits), table.row_header.size());
}

MeanStd mean_std(const std::vector<double>& values) {
  MeanStd m;
  m.n = values.size();
  if (values.empty()) return m;
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(m.n);
  if (m.n > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - m.mean) * (v - m.mean);
    m.std = std::sqrt(sq / static_cast<double>(m.n - 1));
  }
  return m;
}

std::string format(const MeanStd& value, int digits) {
  return fixed(value.mean, digits) + "±" + fixed(value.std, digits);
}

std::string ablation_csv(const std::vector<AblationRow>& rows, int digits) {
  std::ostringstream out;
  out << "framework,block,avg_auc_mean,avg_auc_std,avg_acc_mean,avg_acc_std,seeds,params\n";
  for (const auto& r : rows) {
    out << r.framework << ',' << r.block << ',' << fixed(r.avg_auc.mean, digits) << ','
        << fixed(r.avg_auc.std, digits) << ',' << fixed(r.avg_acc.mean, digits) << ','
        << fixed(r.avg_acc.std, digits) << ',' << r.avg_acc.n << ',' << r.params << '\n';
  }
  return out.str();
}

std::string ablation_text(const std::vector<AblationRow>& rows, int digits) {
  std::vector<std::vector<std::string>> grid;
  grid.push_back({"FS", "FB", "AVG AUC (mean±std)", "AVG ACC (mean±std)", "Params"});
  for (const auto& r : rows) {
    grid.push_back({r.framework, r.block, format(r.avg_auc, digits), format(r.avg_acc, digits),
                    std::to_string(r.params)});
  }
  return render_aligned(grid, 2);
}

std::string metrics_csv(const std::vector<NamedReport>& reports, const data::TaskSchema& schema) {
  std::ostringstream out;
  auto value = [](const std::optional<double>& v) { return v ? text::format_real(*v) : "-"; };
  out << "report,metric,column,value\n";
  for (const auto& [name, r] : reports) {
    out << name << ",avg_auc,AVG," << value(r.avg_auc) << '\n';
    out << name << ",avg_acc,AVG," << text::format_real(r.avg_acc) << '\n';
    for (std::size_t t = 0; t < schema.task_count(); ++t) {
      out << name << ",acc," << schema.task(t).abbrev << ','
          << text::format_real(r.task_accuracy.at(t)) << '\n';
    }
    for (std::size_t t = 0; t < schema.task_count(); ++t) {
      for (std::size_t k = 0; k < schema.category_count(t); ++k) {
        const auto label = schema.column_label({t, k});
        const auto& m = r.at({t, k});
        out << name << ",auc," << label << ',' << value(m.auc) << '\n';
        out << name << ",pre," << label << ',' << value(m.precision) << '\n';
        out << name << ",sen," << label << ',' << value(m.sensitivity) << '\n';
        out << name << ",spe," << label << ',' << value(m.specificity) << '\n';
      }
    }
  }
  return out.str();
}

}  // namespace ammfm::report
