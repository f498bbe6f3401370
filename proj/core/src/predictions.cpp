#include "ammfm/predictions.hpp"

#include <charconv>
#include <fstream>
#include <map>

#include "ammfm/errors.hpp"
#include "text.hpp"

namespace ammfm {

std::string_view to_string(Branch branch) noexcept {
  switch (branch) {
    case Branch::Clinical: return "clinical";
    case Branch::Dermoscopy: return "dermoscopy";
    case Branch::Fusion: return "fusion";
  }
  return "?";
}

Branch parse_branch(std::string_view text) {
  if (text == "clinical") return Branch::Clinical;
  if (text == "dermoscopy") return Branch::Dermoscopy;
  if (text == "fusion") return Branch::Fusion;
  throw ValidationError("unknown branch '" + std::string(text) + "'");
}

const TaskProbabilities& PredictionSet::branch(Branch b) const {
  switch (b) {
    case Branch::Clinical: return clinical;
    case Branch::Dermoscopy: return dermoscopy;
    case Branch::Fusion: return fusion;
  }
  return fusion;
}

TaskProbabilities& PredictionSet::branch(Branch b) {
  return const_cast<TaskProbabilities&>(std::as_const(*this).branch(b));
}

std::size_t argmax(const std::vector<double>& probs) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < probs.size(); ++i) {
    if (probs[i] > probs[best]) best = i;
  }
  return best;
}

void write_prediction_dump(const std::filesystem::path& path,
                           const std::vector<CasePredictions>& cases,
                           const data::TaskSchema& schema) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << "case_id,branch,task,category,probability\n";
  for (const auto& c : cases) {
    for (auto b : kBranches) {
      const auto& probs = c.predictions.branch(b);
      for (std::size_t t = 0; t < probs.size(); ++t) {
        const auto& task = schema.task(t);
        for (std::size_t k = 0; k < probs[t].size(); ++k) {
          out << c.case_id << ',' << to_string(b) << ',' << task.abbrev << ','
              << task.categories[k].abbrev << ',' << text::format_real(probs[t][k]) << '\n';
        }
      }
    }
  }
  if (!out) throw IngestionError("failed writing " + path.string());
}

std::vector<CasePredictions> read_prediction_dump(const std::filesystem::path& path,
                                                  const data::TaskSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IngestionError("cannot open prediction dump " + path.string());
  std::string line;
  if (!std::getline(in, line) || text::trim(line) != "case_id,branch,task,category,probability") {
    throw IngestionError(path.string() + ": line 1: bad header");
  }
  std::vector<CasePredictions> cases;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (text::trim(line).empty()) continue;
    const auto where = path.string() + ": line " + std::to_string(line_no);
    const auto cells = text::split(line, ',');
    if (cells.size() != 5) throw IngestionError(where + ": expected 5 columns");
    auto [it, inserted] = index.emplace(cells[0], cases.size());
    if (inserted) {
      CasePredictions cp{cells[0], {}};
      for (auto b : kBranches) {
        auto& probs = cp.predictions.branch(b);
        probs.resize(schema.task_count());
        for (std::size_t t = 0; t < schema.task_count(); ++t) {
          probs[t].assign(schema.category_count(t), 0.0);
        }
      }
      cases.push_back(std::move(cp));
    }
    Branch branch;
    try {
      branch = parse_branch(cells[1]);
    } catch (const ValidationError& e) {
      throw IngestionError(where + ": " + e.what());
    }
    const auto task = schema.find_task(cells[2]);
    if (!task) throw IngestionError(where + ": unknown task '" + cells[2] + "'");
    const auto cat = schema.task(*task).find(cells[3]);
    if (!cat) throw IngestionError(where + ": unknown category '" + cells[3] + "'");
    double p = 0.0;
    const auto& s = cells[4];
    const auto res = std::from_chars(s.data(), s.data() + s.size(), p);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
      throw IngestionError(where + ": bad probability '" + s + "'");
    }
    cases[it->second].predictions.branch(branch)[*task][*cat] = p;
  }
  return cases;
}

}  // namespace ammfm
