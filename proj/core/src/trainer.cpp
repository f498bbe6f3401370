#include "ammfm/trainer.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <tuple>

#include "ammfm/errors.hpp"
#include "ammfm/ops.hpp"
#include "ammfm/optim.hpp"
#include "text.hpp"

namespace ammfm::training {
namespace {

std::vector<Tensor> parameter_tensors(const model::Model& model) {
  std::vector<Tensor> out;
  for (auto& p : model.parameters()) out.push_back(p.tensor);
  return out;
}

// avg += (x - avg) / n, so identical snapshots leave the average bit-exact.
void accumulate_mean(std::vector<std::vector<double>>& avg, const std::vector<Tensor>& params,
                     std::size_t n) {
  if (n == 1) {
    avg.clear();
    for (const auto& p : params) avg.emplace_back(p.values().begin(), p.values().end());
    return;
  }
  const double inv = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto v = params[i].values();
    for (std::size_t k = 0; k < v.size(); ++k) avg[i][k] += (v[k] - avg[i][k]) * inv;
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
  if (!(swa_window >= 0.0 && swa_window <= 1.0)) {
    throw ConfigError("train: swa_window must lie in [0, 1]");
  }
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("train: learning_rate must be finite and >= 0");
  }
  augment.validate();
}

std::size_t TrainConfig::swa_epochs() const {
  return static_cast<std::size_t>(std::llround(swa_window * static_cast<double>(epochs)));
}

FitResult fit(model::Model& model, const std::vector<data::CaseRecord>& train,
              const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  if (train.empty()) throw ConfigError("train: empty training set");
  const auto& schema = model.schema();
  for (const auto& rec : train) {
    try {
      schema.validate(rec.labels);
    } catch (const ValidationError& e) {
      throw ValidationError("case '" + rec.case_id + "': " + e.what());
    }
  }

  auto params = parameter_tensors(model);
  Adam adam(params, AdamConfig{config.learning_rate});
  const Rng root = Rng(config.seed).split("train");
  const Rng shuffle_root = root.split("shuffle");
  const Rng augment_root = root.split("augment");

  FitResult result;
  const auto swa = config.swa_epochs();
  const auto swa_start = config.epochs - std::min(swa, config.epochs);
  std::vector<std::vector<double>> average;

  std::vector<std::size_t> order(train.size());
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle_rng = shuffle_root.split(static_cast<std::uint64_t>(epoch));
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    const Rng epoch_aug = augment_root.split(static_cast<std::uint64_t>(epoch));

    LossBreakdown sum;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto end = std::min(order.size(), start + config.batch_size);
      const double weight =
          config.reduction == Reduction::Mean ? 1.0 / static_cast<double>(end - start) : 1.0;
      adam.zero_grad();
      for (std::size_t j = start; j < end; ++j) {
        const auto& rec = train[order[j]];
        Tensor clin = rec.clinical;
        Tensor derm = rec.dermoscopy;
        if (config.augment.any()) {
          std::tie(clin, derm) = augment::augment_pair(
              clin, derm, config.augment, epoch_aug.split(static_cast<std::uint64_t>(order[j])));
        }
        const auto fwd = model.forward(clin, derm);
        auto loss = case_loss(fwd, rec.labels, schema, rec.case_id);
        sum += loss.breakdown;
        if (weight != 1.0) loss.total = ops::scale(loss.total, weight);
        loss.total.backward();
      }
      adam.step();
      ++result.optimizer_steps;
    }

    const double n = static_cast<double>(train.size());
    EpochLoss e{epoch + 1,
                {sum.dermoscopy / n, sum.clinical / n, sum.fusion / n, 0.0}};
    e.loss.total = e.loss.dermoscopy + e.loss.clinical + e.loss.fusion;
    result.trace.push_back(e);
    if (on_epoch) on_epoch(e);

    if (swa > 0 && epoch >= swa_start) {
      accumulate_mean(average, params, ++result.swa_snapshots);
    }
  }

  if (result.swa_snapshots > 0) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      auto w = params[i].mutable_values();
      std::copy(average[i].begin(), average[i].end(), w.begin());
    }
  }
  adam.zero_grad();
  return result;
}

std::vector<Tensor> swa_average(const std::vector<std::vector<Tensor>>& snapshots) {
  if (snapshots.empty()) throw ContractError("swa_average: no snapshots");
  const auto& first = snapshots.front();
  for (std::size_t s = 1; s < snapshots.size(); ++s) {
    if (snapshots[s].size() != first.size()) {
      throw ContractError("swa_average: snapshot " + std::to_string(s) + " has " +
                          std::to_string(snapshots[s].size()) + " tensors, expected " +
                          std::to_string(first.size()));
    }
    for (std::size_t i = 0; i < first.size(); ++i) {
      if (snapshots[s][i].shape() != first[i].shape()) {
        throw ContractError("swa_average: snapshot " + std::to_string(s) + " tensor " +
                            std::to_string(i) + " has shape " + snapshots[s][i].shape().str() +
                            ", expected " + first[i].shape().str());
      }
    }
  }
  std::vector<std::vector<double>> avg;
  for (std::size_t s = 0; s < snapshots.size(); ++s) accumulate_mean(avg, snapshots[s], s + 1);
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < first.size(); ++i) {
    out.emplace_back(first[i].shape(), std::move(avg[i]), first[i].requires_grad());
  }
  return out;
}

PredictionSet tta_predict(const model::Model& model, const Tensor& clinical,
                          const Tensor& dermoscopy,
                          const std::vector<augment::TtaTransform>& transforms) {
  if (transforms.empty()) return model.predict(clinical, dermoscopy);
  PredictionSet mean;
  std::size_t n = 0;
  for (auto t : transforms) {
    const auto p = model.predict(augment::apply(t, clinical), augment::apply(t, dermoscopy));
    ++n;
    if (n == 1) {
      mean = p;
      continue;
    }
    const double inv = 1.0 / static_cast<double>(n);
    for (auto b : kBranches) {
      auto& dst = mean.branch(b);
      const auto& src = p.branch(b);
      for (std::size_t task = 0; task < dst.size(); ++task) {
        for (std::size_t k = 0; k < dst[task].size(); ++k) {
          dst[task][k] += (src[task][k] - dst[task][k]) * inv;
        }
      }
    }
  }
  return mean;
}

std::vector<CasePredictions> predict_all(const model::Model& model,
                                         const std::vector<data::CaseRecord>& records,
                                         const std::vector<augment::TtaTransform>& transforms) {
  std::vector<CasePredictions> out;
  out.reserve(records.size());
  for (const auto& rec : records) {
    out.push_back({rec.case_id, tta_predict(model, rec.clinical, rec.dermoscopy, transforms)});
  }
  return out;
}

void write_loss_trace(const std::filesystem::path& path, const std::vector<EpochLoss>& trace) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IngestionError("cannot write " + path.string());
  out << "epoch,L_derm,L_clic,L_fusion,L_total\n";
  for (const auto& e : trace) {
    out << e.epoch << ',' << text::format_real(e.loss.dermoscopy) << ','
        << text::format_real(e.loss.clinical) << ',' << text::format_real(e.loss.fusion) << ','
        << text::format_real(e.loss.total) << '\n';
  }
  if (!out) throw IngestionError("failed writing " + path.string());
}

}  // namespace ammfm::training
