#include "ammfm/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "ammfm/errors.hpp"
#include "ammfm/rng.hpp"
#include "ammfm/serialize.hpp"
#include "text.hpp"

namespace ammfm::data {
namespace {

constexpr std::size_t kColumns = 12;

void check_image(const Tensor& image, const std::string& where) {
  const auto& s = image.shape();
  if (s.rank() != 3 || s[2] != 3) {
    throw IngestionError(where + ": image must be H x W x 3, got " + s.str());
  }
  for (double v : image.values()) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw IngestionError(where + ": pixel value outside [0, 1]");
    }
  }
}

}  // namespace

std::string_view to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

std::optional<Split> parse_split(std::string_view text) {
  if (text.empty()) return std::nullopt;
  if (text == "train") return Split::Train;
  if (text == "val" || text == "valid" || text == "validation") return Split::Val;
  if (text == "test") return Split::Test;
  throw ValidationError("unknown split tag '" + std::string(text) + "'");
}

std::vector<CaseRecord> load_index(const std::filesystem::path& index_csv,
                                   const TaskSchema& schema, const LoadOptions& options) {
  std::ifstream in(index_csv);
  if (!in) throw IngestionError("cannot open case index " + index_csv.string());
  const auto root = options.root.value_or(index_csv.parent_path());

  std::string line;
  if (!std::getline(in, line) || text::trim(line) != kIndexHeader) {
    throw IngestionError(index_csv.string() + ": line 1: expected header '" +
                         std::string(kIndexHeader) + "'");
  }

  std::vector<CaseRecord> records;
  std::set<std::string> ids;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const std::string where = index_csv.string() + ": line " + std::to_string(line_no);
    const auto cells = text::split(line, ',');
    if (cells.size() != kColumns) {
      throw IngestionError(where + ": expected " + std::to_string(kColumns) + " columns, got " +
                           std::to_string(cells.size()));
    }
    CaseRecord rec;
    rec.case_id = cells[0];
    if (rec.case_id.empty()) throw IngestionError(where + ": empty case_id");
    if (!ids.insert(rec.case_id).second) {
      throw IngestionError(where + ": duplicate case_id '" + rec.case_id + "'");
    }
    rec.clinical_path = cells[1];
    rec.dermoscopy_path = cells[2];
    for (std::size_t t = 0; t < kTaskCount; ++t) {
      const auto& task = schema.task(t);
      const auto idx = task.find(cells[3 + t]);
      if (!idx) {
        throw IngestionError(where + ": task " + task.abbrev + ": unknown category '" +
                             cells[3 + t] + "'");
      }
      rec.labels[t] = *idx;
    }
    try {
      rec.split = parse_split(cells[11]);
    } catch (const ValidationError& e) {
      throw IngestionError(where + ": " + e.what());
    }
    if (options.load_images) {
      rec.clinical = load_tensor(root / rec.clinical_path);
      rec.dermoscopy = load_tensor(root / rec.dermoscopy_path);
      check_image(rec.clinical, where + " (clinical)");
      check_image(rec.dermoscopy, where + " (dermoscopy)");
      if (rec.clinical.shape() != rec.dermoscopy.shape()) {
        throw IngestionError(where + ": clinical and dermoscopy images differ in size");
      }
    }
    records.push_back(std::move(rec));
  }
  return records;
}

void write_dataset(const std::filesystem::path& root, const std::vector<CaseRecord>& records,
                   const TaskSchema& schema) {
  std::filesystem::create_directories(root / "images");
  std::ofstream index(root / "index.csv", std::ios::trunc);
  if (!index) throw IngestionError("cannot write " + (root / "index.csv").string());
  index << kIndexHeader << '\n';
  for (const auto& rec : records) {
    schema.validate(rec.labels);
    const auto clin = rec.clinical_path.empty() ? "images/" + rec.case_id + "_clin.bin"
                                                : rec.clinical_path;
    const auto derm = rec.dermoscopy_path.empty() ? "images/" + rec.case_id + "_derm.bin"
                                                  : rec.dermoscopy_path;
    save_tensor(root / clin, rec.clinical);
    save_tensor(root / derm, rec.dermoscopy);
    index << rec.case_id << ',' << clin << ',' << derm;
    for (std::size_t t = 0; t < kTaskCount; ++t) {
      index << ',' << schema.task(t).categories[rec.labels[t]].abbrev;
    }
    index << ',' << (rec.split ? to_string(*rec.split) : std::string_view{}) << '\n';
  }
  if (!index) throw IngestionError("failed writing " + (root / "index.csv").string());
}

Partition split(const std::vector<CaseRecord>& records, const SplitRatios& ratios,
                std::uint64_t seed) {
  Partition out;
  const auto tagged = std::count_if(records.begin(), records.end(),
                                    [](const CaseRecord& r) { return r.split.has_value(); });
  if (tagged > 0) {
    if (static_cast<std::size_t>(tagged) != records.size()) {
      throw ConfigError("split: " + std::to_string(records.size() - tagged) + " of " +
                        std::to_string(records.size()) + " records lack a split tag");
    }
    for (const auto& r : records) {
      switch (*r.split) {
        case Split::Train: out.train.push_back(r); break;
        case Split::Val: out.val.push_back(r); break;
        case Split::Test: out.test.push_back(r); break;
      }
    }
  } else {
    if (!(ratios.train > 0 && ratios.val > 0 && ratios.test > 0) ||
        std::abs(ratios.train + ratios.val + ratios.test - 1.0) > 1e-9) {
      throw ConfigError("split: ratios must be positive and sum to 1");
    }
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = Rng(seed).split("split");
    rng.shuffle(std::span<std::size_t>(order));
    const auto n = static_cast<double>(records.size());
    const auto n_train = static_cast<std::size_t>(std::llround(n * ratios.train));
    const auto n_val =
        std::min(static_cast<std::size_t>(std::llround(n * ratios.val)), records.size() - std::min(n_train, records.size()));
    for (std::size_t i = 0; i < order.size(); ++i) {
      auto rec = records[order[i]];
      if (i < n_train) {
        rec.split = Split::Train;
        out.train.push_back(std::move(rec));
      } else if (i < n_train + n_val) {
        rec.split = Split::Val;
        out.val.push_back(std::move(rec));
      } else {
        rec.split = Split::Test;
        out.test.push_back(std::move(rec));
      }
    }
  }
  if (out.train.empty() || out.val.empty() || out.test.empty()) {
    throw ConfigError("split: empty partition (train " + std::to_string(out.train.size()) +
                      ", val " + std::to_string(out.val.size()) + ", test " +
                      std::to_string(out.test.size()) + ")");
  }
  return out;
}

double majority_rate(const std::vector<std::vector<double>>& marginals) {
  if (marginals.empty()) return 0.0;
  double total = 0.0;
  for (const auto& m : marginals) total += *std::max_element(m.begin(), m.end());
  return total / static_cast<double>(marginals.size());
}

}  // namespace ammfm::data
