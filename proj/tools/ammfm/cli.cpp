#include "ammfm/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <ostream>

#include "ammfm/commands.hpp"
#include "ammfm/config_file.hpp"
#include "ammfm/errors.hpp"

namespace ammfm::cli {
namespace {

// Values from --config fill every option not given on the command line.
void apply_config_file(CLI::App& sub, const std::string& path) {
  if (path.empty()) return;
  const auto kv = KeyValues::read(path);
  for (const auto& [key, value] : kv.entries()) {
    std::string name = key;
    std::replace(name.begin(), name.end(), '_', '-');
    CLI::Option* opt = sub.get_option_no_throw("--" + name);
    if (opt == nullptr || name == "config") {
      throw ConfigError(path + ": unknown key '" + key + "' for '" + sub.get_name() + "'");
    }
    if (opt->count() > 0) continue;
    if (opt->get_expected_max() == 0) {
      if (parse_bool(key, value)) opt->add_result("true");
      else continue;
    } else if (opt->get_expected_max() > 1) {
      for (const auto& item : CLI::detail::split(value, ',')) opt->add_result(item);
    } else {
      opt->add_result(value);
    }
    opt->run_callback();
  }
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Asymmetric multi-modal fusion: data, training, evaluation and audits", "ammfm"};
  app.require_subcommand(1);

  GenDataOptions gen;
  TrainOptions train;
  EvalOptions eval;
  ParamsOptions params;
  AblateOptions ablate;
  std::string gen_cfg, train_cfg, eval_cfg, params_cfg, ablate_cfg;

  auto* g = app.add_subcommand("gen-data", "Write a synthetic paired-modality dataset");
  g->add_option("--out", gen.out, "Dataset directory");
  g->add_option("--cases", gen.cases, "Number of cases")->capture_default_str();
  g->add_option("--size", gen.size, "Image side (multiple of 4)")->capture_default_str();
  g->add_option("--derm-snr", gen.derm_snr, "Dermoscopy signal scale")->capture_default_str();
  g->add_option("--clin-snr", gen.clin_snr, "Clinical signal scale")->capture_default_str();
  g->add_option("--noise", gen.noise, "Noise standard deviation")->capture_default_str();
  g->add_option("--train-fraction", gen.train_fraction)->capture_default_str();
  g->add_option("--val-fraction", gen.val_fraction)->capture_default_str();
  g->add_option("--seed", gen.seed)->capture_default_str();
  g->add_option("--config", gen_cfg, "key = value file; flags override it");

  auto* t = app.add_subcommand("train", "Train one framework/block configuration");
  t->add_option("--data", train.data, "Dataset directory with index.csv");
  t->add_option("--out", train.out, "Run directory");
  t->add_option("--framework", train.framework, "sff or aff")->capture_default_str();
  t->add_option("--block", train.block, "cat, bab or aab")->capture_default_str();
  t->add_option("--heavy-preset", train.heavy_preset)->capture_default_str();
  t->add_option("--light-preset", train.light_preset)->capture_default_str();
  t->add_option("--epochs", train.epochs)->capture_default_str();
  t->add_option("--batch-size", train.batch_size)->capture_default_str();
  t->add_option("--lr", train.learning_rate)->capture_default_str();
  t->add_option("--swa-window", train.swa_window, "Averaged fraction of final epochs")
      ->capture_default_str();
  t->add_option("--reduction", train.reduction, "sum or mean")->capture_default_str();
  t->add_option("--augment", train.augment, "flip,shift,scale,rotate,brighten")->delimiter(',');
  t->add_flag("--scaled-attention", train.scaled_attention, "Divide logits by sqrt(C)");
  t->add_option("--seed", train.seed)->capture_default_str();
  t->add_option("--split-seed", train.split_seed, "Shuffle seed for untagged datasets")
      ->capture_default_str();
  t->add_option("--config", train_cfg, "key = value file; flags override it");

  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint on the validation/test splits");
  e->add_option("--checkpoint", eval.checkpoint, "Checkpoint directory");
  e->add_option("--data", eval.data, "Dataset directory with index.csv");
  e->add_option("--out", eval.out, "Output directory (default: next to the checkpoint)");
  e->add_flag("--tta", eval.tta, "Average over identity and flips");
  e->add_option("--weights", eval.weights, "'search' or W_D,W_C,W_FU")->capture_default_str();
  e->add_option("--step", eval.step, "Weight grid spacing")->capture_default_str();
  e->add_option("--objective", eval.objective, "avg_acc or avg_auc")->capture_default_str();
  e->add_option("--split-seed", eval.split_seed, "Shuffle seed for untagged datasets")
      ->capture_default_str();
  e->add_option("--config", eval_cfg, "key = value file; flags override it");

  auto* p = app.add_subcommand("params", "Parameter audit of a configuration or checkpoint");
  p->add_option("--framework", params.framework)->capture_default_str();
  p->add_option("--block", params.block)->capture_default_str();
  p->add_option("--preset,--heavy-preset", params.heavy_preset, "Heavy backbone preset")
      ->capture_default_str();
  p->add_option("--light-preset", params.light_preset)->capture_default_str();
  p->add_option("--checkpoint", params.checkpoint, "Read the audit from a checkpoint");
  p->add_flag("--grid", params.grid, "Audit every framework x block pair");
  p->add_option("--config", params_cfg, "key = value file; flags override it");

  auto* a = app.add_subcommand("ablate", "Framework x block grid, mean and std over seeds");
  a->add_option("--data", ablate.data, "Dataset directory with index.csv");
  a->add_option("--out", ablate.out, "Directory for ablation.csv and per-cell runs");
  a->add_option("--seeds", ablate.seeds, "Seeds per cell")->capture_default_str();
  a->add_option("--grid", ablate.grid, "Comma-separated framework:block cells")
      ->capture_default_str();
  a->add_option("--heavy-preset", ablate.heavy_preset)->capture_default_str();
  a->add_option("--light-preset", ablate.light_preset)->capture_default_str();
  a->add_option("--epochs", ablate.epochs)->capture_default_str();
  a->add_option("--batch-size", ablate.batch_size)->capture_default_str();
  a->add_option("--lr", ablate.learning_rate)->capture_default_str();
  a->add_option("--swa-window", ablate.swa_window)->capture_default_str();
  a->add_option("--seed", ablate.seed, "First seed")->capture_default_str();
  a->add_option("--split-seed", ablate.split_seed, "Shuffle seed for untagged datasets")
      ->capture_default_str();
  a->add_option("--config", ablate_cfg, "key = value file; flags override it");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (g->parsed()) {
      apply_config_file(*g, gen_cfg);
      return cmd_gen_data(gen, out, err);
    }
    if (t->parsed()) {
      apply_config_file(*t, train_cfg);
      return cmd_train(train, out, err);
    }
    if (e->parsed()) {
      apply_config_file(*e, eval_cfg);
      return cmd_eval(eval, out, err);
    }
    if (p->parsed()) {
      apply_config_file(*p, params_cfg);
      return cmd_params(params, out, err);
    }
    apply_config_file(*a, ablate_cfg);
    return cmd_ablate(ablate, out, err);
  } catch (const CLI::ParseError& ex) {
    // Help requests print to `out` and report success.
    return app.exit(ex, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitFailure;
  }
}

}  // namespace ammfm::cli
