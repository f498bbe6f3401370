#include "ammfm/experiment.hpp"

#include <fstream>

#include "ammfm/checkpoint.hpp"
#include "ammfm/errors.hpp"
#include "ammfm/hash.hpp"
#include "ammfm/report.hpp"

namespace ammfm::experiment {
namespace {

std::vector<data::LabelVector> labels_of(const std::vector<data::CaseRecord>& records) {
  std::vector<data::LabelVector> out;
  out.reserve(records.size());
  for (const auto& r : records) out.push_back(r.labels);
  return out;
}

BranchReports branch_reports(const std::vector<CasePredictions>& preds,
                             const std::vector<data::LabelVector>& labels,
                             const fusion::FusionWeights& weights,
                             const data::TaskSchema& schema) {
  std::vector<TaskProbabilities> c, d, f, fi;
  for (const auto& p : preds) {
    c.push_back(p.predictions.clinical);
    d.push_back(p.predictions.dermoscopy);
    f.push_back(p.predictions.fusion);
    fi.push_back(fusion::weighted_fuse(p.predictions, weights));
  }
  return {metrics::evaluate(c, labels, schema), metrics::evaluate(d, labels, schema),
          metrics::evaluate(f, labels, schema), metrics::evaluate(fi, labels, schema)};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << content;
  if (!out) throw IngestionError("failed writing " + path.string());
}

}  // namespace

std::vector<std::pair<std::string, metrics::MetricsReport>> BranchReports::named() const {
  return {{"P_C", clinical}, {"P_D", dermoscopy}, {"P_FU", fusion}, {"P_FI", final_prediction}};
}

EvalResult evaluate_model(const model::Model& model, const data::Partition& partition,
                          const EvalConfig& config) {
  const auto& schema = model.schema();
  EvalResult r;
  r.validation_predictions = training::predict_all(model, partition.val, config.tta);
  r.test_predictions = training::predict_all(model, partition.test, config.tta);
  const auto val_labels = labels_of(partition.val);
  if (config.weights) {
    config.weights->validate();
    r.weights = *config.weights;
  } else {
    std::vector<PredictionSet> val;
    for (const auto& p : r.validation_predictions) val.push_back(p.predictions);
    const auto search =
        fusion::weight_search(val, val_labels, config.search_step, config.objective, schema);
    r.weights = search.weights;
    r.searched = true;
    r.search_candidates = search.candidates;
  }
  r.validation = branch_reports(r.validation_predictions, val_labels, r.weights, schema);
  r.test = branch_reports(r.test_predictions, labels_of(partition.test), r.weights, schema);
  return r;
}

std::filesystem::path write_evaluation(const std::filesystem::path& dir, const EvalResult& result,
                                       const data::TaskSchema& schema) {
  std::filesystem::create_directories(dir);
  write_prediction_dump(dir / "predictions_val.csv", result.validation_predictions, schema);
  write_prediction_dump(dir / "predictions_test.csv", result.test_predictions, schema);
  write_file(dir / "metrics_val.csv", report::metrics_csv(result.validation.named(), schema));
  const auto test_metrics = dir / "metrics_test.csv";
  write_file(test_metrics, report::metrics_csv(result.test.named(), schema));

  const auto named = result.test.named();
  std::string text = "Fusion weights (W_D, W_C, W_FU): " + result.weights.str() +
                     (result.searched ? " (searched on validation, " +
                                            std::to_string(result.search_candidates) +
                                            " candidates)\n\n"
                                      : " (fixed)\n\n");
  text += report::to_text(report::auc_table(named, schema)) + "\n";
  text += report::to_text(report::accuracy_table(named, schema)) + "\n";
  text += report::to_text(report::melanoma_table(named, schema));
  for (const auto& [name, r] : named) {
    for (const auto& w : r.warnings) text += "warning: " + name + ": " + w + "\n";
  }
  write_file(dir / "report.txt", text);
  write_file(dir / "auc_table.csv", report::to_csv(report::auc_table(named, schema)));
  write_file(dir / "accuracy_table.csv", report::to_csv(report::accuracy_table(named, schema)));
  write_file(dir / "melanoma_table.csv", report::to_csv(report::melanoma_table(named, schema)));
  return test_metrics;
}

CellResult run_cell(const data::Partition& partition, const CellConfig& config,
                    const std::optional<std::filesystem::path>& out_dir) {
  CellResult r;
  auto model = model::Model::build(config.model, config.seed);
  r.params = model.count_params();
  auto train = config.train;
  train.seed = config.seed;
  r.fit = training::fit(model, partition.train, train);
  r.eval = evaluate_model(model, partition, config.eval);
  if (out_dir) {
    std::filesystem::create_directories(*out_dir);
    const auto ckpt = *out_dir / "checkpoint";
    model::save_checkpoint(ckpt, model);
    training::write_loss_trace(*out_dir / "loss_trace.csv", r.fit.trace);
    const auto metrics_file = write_evaluation(*out_dir / "eval", r.eval, model.schema());
    r.checkpoint_hash = hash_directory(ckpt);
    r.metrics_hash = hash_file(metrics_file);
  }
  return r;
}

}  // namespace ammfm::experiment
