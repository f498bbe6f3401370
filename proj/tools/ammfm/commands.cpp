#include "ammfm/commands.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <filesystem>
#include <map>
#include <ostream>

#include "ammfm/checkpoint.hpp"
#include "ammfm/cli.hpp"
#include "ammfm/errors.hpp"
#include "ammfm/experiment.hpp"
#include "ammfm/manifest.hpp"
#include "ammfm/report.hpp"
#include "ammfm/synth.hpp"

namespace ammfm::cli {
namespace fs = std::filesystem;
namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string real(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string pad_left(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : std::string(w - s.size(), ' ') + s;
}

std::string pad_right(const std::string& s, std::size_t w) {
  return s.size() >= w ? s : s + std::string(w - s.size(), ' ');
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find(',', start);
    if (pos == std::string::npos) pos = text.size();
    auto item = text.substr(start, pos - start);
    const auto a = item.find_first_not_of(" \t");
    if (a != std::string::npos) items.push_back(item.substr(a, item.find_last_not_of(" \t") - a + 1));
    start = pos + 1;
  }
  return items;
}

void require_option(const std::string& value, const char* flag) {
  if (value.empty()) throw UsageError(std::string(flag) + " is required");
}

void require_dir(const std::string& path, const char* flag) {
  if (path.empty() || !fs::is_directory(path)) {
    throw UsageError(std::string(flag) + ": directory '" + path + "' does not exist");
  }
}

std::vector<data::CaseRecord> load_dataset(const std::string& dir) {
  require_dir(dir, "--data");
  const auto index = fs::path(dir) / "index.csv";
  if (!fs::exists(index)) throw UsageError("--data: no index.csv in '" + dir + "'");
  auto records = data::load_index(index);
  if (records.empty()) throw UsageError("--data: dataset '" + dir + "' has no cases");
  return records;
}

model::ModelConfig model_config(const std::string& framework, const std::string& block,
                                const std::string& heavy, const std::string& light,
                                const std::vector<data::CaseRecord>& records) {
  auto config = model::ModelConfig::make(model::parse_framework(framework),
                                         blocks::parse_fusion_block(block), heavy, light);
  if (!records.empty()) {
    const auto& shape = records.front().clinical.shape();
    config.input_height = shape[0];
    config.input_width = shape[1];
  }
  return config;
}

augment::AugmentConfig augment_config(const std::vector<std::string>& names) {
  augment::AugmentConfig a;
  for (const auto& n : names) {
    if (n == "flip") a.flip = true;
    else if (n == "shift") a.shift = true;
    else if (n == "scale") a.scale = true;
    else if (n == "rotate") a.rotate = true;
    else if (n == "brighten") a.brighten = true;
    else if (n == "all") a.flip = a.shift = a.scale = a.rotate = a.brighten = true;
    else if (n != "none") throw ConfigError("unknown augmentation '" + n + "'");
  }
  return a;
}

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + items[i];
  return out;
}

void print_audit_header(std::ostream& out) {
  out << pad_right("config", 10) << pad_left("clinical_bb", 12)
      << pad_left("derm_bb", 10) << pad_left("align", 8)
      << pad_left("attention", 11) << pad_left("heads", 8)
      << pad_left("total", 9) << '\n';
}

void print_audit_row(std::ostream& out, const std::string& name, const model::ParamAudit& a) {
  out << pad_right(name, 10) << pad_left(std::to_string(a.clinical_backbone), 12)
      << pad_left(std::to_string(a.dermoscopy_backbone), 10)
      << pad_left(std::to_string(a.alignment), 8)
      << pad_left(std::to_string(a.attention), 11)
      << pad_left(std::to_string(a.heads), 8) << pad_left(std::to_string(a.total), 9)
      << '\n';
}

KeyValues train_config_kv(const TrainOptions& o) {
  KeyValues kv;
  kv.set("data", o.data);
  kv.set("out", o.out);
  kv.set("framework", o.framework);
  kv.set("block", o.block);
  kv.set("heavy_preset", o.heavy_preset);
  kv.set("light_preset", o.light_preset);
  kv.set("epochs", std::to_string(o.epochs));
  kv.set("batch_size", std::to_string(o.batch_size));
  kv.set("lr", real(o.learning_rate));
  kv.set("swa_window", real(o.swa_window));
  kv.set("reduction", o.reduction);
  kv.set("augment", join(o.augment));
  kv.set("scaled_attention", o.scaled_attention ? "true" : "false");
  kv.set("split_seed", std::to_string(o.split_seed));
  return kv;
}

}  // namespace

int cmd_gen_data(const GenDataOptions& o, std::ostream& out, std::ostream& err) {
  require_option(o.out, "--out");
  data::SynthConfig sc;
  sc.cases = o.cases;
  sc.image_size = o.size;
  sc.derm_snr = o.derm_snr;
  sc.clin_snr = o.clin_snr;
  sc.noise_std = o.noise;
  sc.seed = o.seed;
  sc.validate(data::TaskSchema::spc());
  if (o.derm_snr <= o.clin_snr) {
    err << "warning: --derm-snr " << o.derm_snr << " <= --clin-snr " << o.clin_snr
        << "; dermoscopy images will not carry the stronger signal\n";
  }
  const data::SplitRatios ratios{o.train_fraction, o.val_fraction,
                                 1.0 - o.train_fraction - o.val_fraction};
  auto records = data::synth_generate(sc);
  const auto part = data::split(records, ratios, o.seed);
  std::map<std::string, data::Split> tag;
  for (const auto& r : part.train) tag[r.case_id] = data::Split::Train;
  for (const auto& r : part.val) tag[r.case_id] = data::Split::Val;
  for (const auto& r : part.test) tag[r.case_id] = data::Split::Test;
  for (auto& r : records) r.split = tag.at(r.case_id);

  fs::create_directories(o.out);
  data::write_dataset(o.out, records);

  // No timestamps: the directory must be byte-identical across reruns.
  RunManifest m;
  m.command = "gen-data";
  m.seed = o.seed;
  m.config.set("cases", std::to_string(o.cases));
  m.config.set("size", std::to_string(o.size));
  m.config.set("derm_snr", real(o.derm_snr));
  m.config.set("clin_snr", real(o.clin_snr));
  m.config.set("noise", real(o.noise));
  m.config.set("train_fraction", real(o.train_fraction));
  m.config.set("val_fraction", real(o.val_fraction));
  m.add_output("index", fs::path(o.out) / "index.csv");
  m.write(fs::path(o.out) / "manifest.txt");

  out << "wrote " << records.size() << " cases to " << o.out << " (train " << part.train.size()
      << ", val " << part.val.size() << ", test " << part.test.size() << ")\n";
  return kExitOk;
}

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream&) {
  RunManifest m;
  m.command = "train";
  m.started_at = utc_timestamp();
  require_option(o.out, "--out");
  const auto records = load_dataset(o.data);
  const auto config =
      model_config(o.framework, o.block, o.heavy_preset, o.light_preset, records);
  auto mc = config;
  mc.scaled_attention = o.scaled_attention;
  training::TrainConfig tc;
  tc.batch_size = o.batch_size;
  tc.epochs = o.epochs;
  tc.learning_rate = o.learning_rate;
  tc.swa_window = o.swa_window;
  tc.reduction = training::parse_reduction(o.reduction);
  tc.augment = augment_config(o.augment);
  tc.seed = o.seed;
  tc.validate();

  const auto part = data::split(records, {}, o.split_seed);
  auto model = model::Model::build(mc, o.seed);
  const auto audit = model.count_params();
  out << "training " << o.framework << "-" << o.block << " (" << audit.total
      << " parameters) on " << part.train.size() << " cases for " << o.epochs << " epochs\n";
  const auto fit = training::fit(model, part.train, tc, [&](const training::EpochLoss& e) {
    out << "epoch " << e.epoch << "  L_derm " << fixed(e.loss.dermoscopy, 4) << "  L_clic "
        << fixed(e.loss.clinical, 4) << "  L_fusion " << fixed(e.loss.fusion, 4)
        << "  L_total " << fixed(e.loss.total, 4) << '\n';
  });

  const fs::path dir(o.out);
  fs::create_directories(dir);
  model::save_checkpoint(dir / "checkpoint", model);
  training::write_loss_trace(dir / "loss_trace.csv", fit.trace);

  m.seed = o.seed;
  m.config = train_config_kv(o);
  m.add_input("data", o.data);
  m.add_output("checkpoint", dir / "checkpoint");
  m.add_output("loss_trace", dir / "loss_trace.csv");
  m.finished_at = utc_timestamp();
  m.write(dir / "manifest.txt");
  out << "checkpoint " << (dir / "checkpoint").string() << " (" << m.outputs[0].second.second
      << ")\n";
  return kExitOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream& err) {
  RunManifest m;
  m.command = "eval";
  m.started_at = utc_timestamp();
  require_option(o.checkpoint, "--checkpoint");
  if (!fs::exists(fs::path(o.checkpoint) / "params.txt")) {
    throw UsageError("--checkpoint: no checkpoint at '" + o.checkpoint + "'");
  }
  const auto records = load_dataset(o.data);
  const auto model = model::load_checkpoint(o.checkpoint);

  experiment::EvalConfig ec;
  if (o.tta) ec.tta = augment::default_tta();
  if (o.weights != "search") ec.weights = fusion::FusionWeights::parse(o.weights);
  ec.search_step = o.step;
  ec.objective = fusion::parse_objective(o.objective);
  if (!(o.step > 0.0 && o.step <= 1.0)) throw ConfigError("--step must lie in (0, 1]");

  const auto part = data::split(records, {}, o.split_seed);
  const auto result = experiment::evaluate_model(model, part, ec);
  const fs::path dir =
      o.out.empty() ? fs::path(o.checkpoint).lexically_normal().parent_path() / "eval" : fs::path(o.out);
  const auto metrics_file = experiment::write_evaluation(dir, result, model.schema());

  m.config.set("checkpoint", o.checkpoint);
  m.config.set("data", o.data);
  m.config.set("tta", o.tta ? "true" : "false");
  m.config.set("weights", o.weights);
  m.config.set("step", real(o.step));
  m.config.set("objective", o.objective);
  m.config.set("split_seed", std::to_string(o.split_seed));
  m.config.set("selected_weights", result.weights.str());
  m.add_input("checkpoint", o.checkpoint);
  m.add_input("data", o.data);
  m.add_output("metrics_test", metrics_file);
  m.add_output("metrics_val", dir / "metrics_val.csv");
  m.add_output("predictions_test", dir / "predictions_test.csv");
  m.finished_at = utc_timestamp();
  m.write(dir / "manifest.txt");

  const auto named = result.test.named();
  out << "fusion weights (W_D, W_C, W_FU) = " << result.weights.str()
      << (result.searched ? " [searched on validation]\n" : " [fixed]\n");
  out << "validation AVG ACC: P_C " << fixed(result.validation.clinical.avg_acc, 4)
      << "  P_D " << fixed(result.validation.dermoscopy.avg_acc, 4) << "  P_FU "
      << fixed(result.validation.fusion.avg_acc, 4) << "  P_FI "
      << fixed(result.validation.final_prediction.avg_acc, 4) << "\n\n";
  out << report::to_text(report::accuracy_table(named, model.schema())) << '\n';
  out << report::to_text(report::auc_table(named, model.schema()));
  out << "wrote " << dir.string() << '\n';

  bool nan = false;
  for (const auto& [name, r] : named) {
    for (const auto& w : r.warnings) err << "warning: " << name << ": " << w << '\n';
    if (r.has_nan()) {
      err << "error: NaN metric in " << name << '\n';
      nan = true;
    }
  }
  return nan ? kExitFailure : kExitOk;
}

int cmd_params(const ParamsOptions& o, std::ostream& out, std::ostream&) {
  if (!o.checkpoint.empty()) {
    if (!fs::exists(fs::path(o.checkpoint) / "params.txt")) {
      throw UsageError("--checkpoint: no checkpoint at '" + o.checkpoint + "'");
    }
    const auto config = model::read_checkpoint_config(o.checkpoint);
    const auto audit = model::read_checkpoint_audit(o.checkpoint);
    print_audit_header(out);
    print_audit_row(out,
                    std::string(model::to_string(config.framework)) + "-" +
                        std::string(blocks::to_string(config.block)),
                    audit);
    return kExitOk;
  }
  std::vector<std::pair<std::string, std::string>> cells;
  if (o.grid) {
    for (const char* fw : {"sff", "aff"}) {
      for (const char* b : {"cat", "bab", "aab"}) cells.emplace_back(fw, b);
    }
  } else {
    cells.emplace_back(o.framework, o.block);
  }
  print_audit_header(out);
  for (const auto& [fw, b] : cells) {
    const auto audit = model::audit_config(model_config(fw, b, o.heavy_preset, o.light_preset, {}));
    print_audit_row(out, fw + "-" + b, audit);
  }
  return kExitOk;
}

int cmd_ablate(const AblateOptions& o, std::ostream& out, std::ostream&) {
  if (o.seeds == 0) throw ConfigError("--seeds must be >= 1");
  RunManifest m;
  m.command = "ablate";
  m.started_at = utc_timestamp();
  const auto records = load_dataset(o.data);
  const auto part = data::split(records, {}, o.split_seed);

  std::vector<std::pair<std::string, std::string>> cells;
  for (const auto& cell : split_list(o.grid)) {
    const auto colon = cell.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("--grid: cell '" + cell + "' must be framework:block");
    }
    cells.emplace_back(cell.substr(0, colon), cell.substr(colon + 1));
  }
  if (cells.empty()) throw ConfigError("--grid: no cells");

  training::TrainConfig tc;
  tc.epochs = o.epochs;
  tc.batch_size = o.batch_size;
  tc.learning_rate = o.learning_rate;
  tc.swa_window = o.swa_window;
  tc.validate();

  std::vector<report::AblationRow> rows;
  for (const auto& [fw, b] : cells) {
    experiment::CellConfig cc;
    cc.model = model_config(fw, b, o.heavy_preset, o.light_preset, records);
    cc.train = tc;
    std::vector<double> aucs, accs;
    report::AblationRow row;
    row.framework = std::string(model::to_string(cc.model.framework));
    row.block = std::string(blocks::to_string(cc.model.block));
    for (std::size_t k = 0; k < o.seeds; ++k) {
      cc.seed = o.seed + k;
      std::optional<fs::path> cell_dir;
      if (!o.out.empty()) {
        cell_dir = fs::path(o.out) / (row.framework + "-" + row.block) /
                   ("seed" + std::to_string(cc.seed));
      }
      const auto r = experiment::run_cell(part, cc, cell_dir);
      row.params = r.params.total;
      aucs.push_back(r.eval.test.final_prediction.avg_auc.value_or(NAN));
      accs.push_back(r.eval.test.final_prediction.avg_acc);
      out << row.framework << "-" << row.block << " seed " << cc.seed << ": AVG AUC "
          << fixed(aucs.back(), 4) << "  AVG ACC " << fixed(accs.back(), 4)
          << '\n';
    }
    row.avg_auc = report::mean_std(aucs);
    row.avg_acc = report::mean_std(accs);
    rows.push_back(row);
  }
  out << '\n' << report::ablation_text(rows);
  if (!o.out.empty()) {
    const fs::path dir(o.out);
    fs::create_directories(dir);
    {
      std::ofstream csv(dir / "ablation.csv", std::ios::trunc);
      csv << report::ablation_csv(rows);
    }
    m.seed = o.seed;
    m.config.set("data", o.data);
    m.config.set("seeds", std::to_string(o.seeds));
    m.config.set("grid", o.grid);
    m.config.set("heavy_preset", o.heavy_preset);
    m.config.set("light_preset", o.light_preset);
    m.config.set("epochs", std::to_string(o.epochs));
    m.config.set("batch_size", std::to_string(o.batch_size));
    m.config.set("lr", real(o.learning_rate));
    m.config.set("swa_window", real(o.swa_window));
    m.config.set("split_seed", std::to_string(o.split_seed));
    m.add_input("data", o.data);
    m.add_output("ablation", dir / "ablation.csv");
    m.finished_at = utc_timestamp();
    m.write(dir / "manifest.txt");
  }
  return kExitOk;
}

}  // namespace ammfm::cli
