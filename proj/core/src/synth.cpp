#include "ammfm/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "ammfm/errors.hpp"
#include "ammfm/rng.hpp"

namespace ammfm::data {
namespace {

constexpr std::array<std::array<int, 4>, 4> kWalsh{{
    {1, 1, 1, 1},
    {1, -1, 1, -1},
    {1, 1, -1, -1},
    {1, -1, -1, 1},
}};
constexpr std::size_t kChannels = 3;
// Non-constant 4x4 Walsh motifs per channel.
constexpr std::size_t kMotifs = 15;

struct TemplateSlot {
  std::size_t channel;
  std::size_t row_fn;
  std::size_t col_fn;
};

TemplateSlot slot(const TaskSchema& schema, std::size_t task, std::size_t category) {
  const auto g = schema.category_offset(task) + category;
  const auto motif = 1 + g / kChannels;
  return {g % kChannels, motif / 4, motif % 4};
}

std::size_t sample_category(const std::vector<double>& probs, double u) {
  double acc = 0.0;
  for (std::size_t c = 0; c + 1 < probs.size(); ++c) {
    acc += probs[c];
    if (u < acc) return c;
  }
  return probs.size() - 1;
}

}  // namespace

void SynthConfig::validate(const TaskSchema& schema) const {
  if (cases == 0) throw ConfigError("synth: case count must be positive");
  if (image_size == 0 || image_size % 4 != 0) {
    throw ConfigError("synth: image size must be a positive multiple of 4, got " +
                      std::to_string(image_size));
  }
  if (!(derm_snr >= 0.0) || !(clin_snr >= 0.0)) throw ConfigError("synth: snr must be >= 0");
  if (!(noise_std >= 0.0)) throw ConfigError("synth: noise_std must be >= 0");
  if (!(intensity_scale > 0.0)) throw ConfigError("synth: intensity_scale must be positive");
  if (schema.total_categories() > kChannels * kMotifs) {
    throw ConfigError("synth: schema has more categories than orthogonal templates");
  }
  if (!marginals.empty()) {
    if (marginals.size() != schema.task_count()) {
      throw ConfigError("synth: marginals must list every task");
    }
    for (std::size_t t = 0; t < marginals.size(); ++t) {
      const auto& m = marginals[t];
      if (m.size() != schema.category_count(t)) {
        throw ConfigError("synth: marginals for task " + schema.task(t).abbrev +
                          " have the wrong length");
      }
      double total = 0.0;
      for (double p : m) {
        if (!(p >= 0.0)) throw ConfigError("synth: negative marginal");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-9) {
        throw ConfigError("synth: marginals for task " + schema.task(t).abbrev +
                          " do not sum to 1");
      }
    }
  }
}

Tensor synth_template(const TaskSchema& schema, std::size_t task, std::size_t category,
                      std::size_t size) {
  if (category >= schema.category_count(task)) {
    throw IndexError("synth_template: category out of range");
  }
  const auto s = slot(schema, task, category);
  std::vector<double> values(size * size * kChannels, 0.0);
  for (std::size_t y = 0; y < size; ++y) {
    for (std::size_t x = 0; x < size; ++x) {
      values[(y * size + x) * kChannels + s.channel] =
          kWalsh[s.row_fn][y % 4] * kWalsh[s.col_fn][x % 4];
    }
  }
  return Tensor(Shape{size, size, kChannels}, std::move(values));
}

std::vector<CaseRecord> synth_generate(const SynthConfig& config, const TaskSchema& schema) {
  config.validate(schema);
  std::vector<std::vector<double>> marginals = config.marginals;
  if (marginals.empty()) {
    for (const auto& t : schema.tasks()) marginals.push_back(t.reference_marginals());
  }

  const auto size = config.image_size;
  const auto pixels = size * size * kChannels;
  std::vector<std::vector<Tensor>> templates(schema.task_count());
  for (std::size_t t = 0; t < schema.task_count(); ++t) {
    for (std::size_t c = 0; c < schema.category_count(t); ++c) {
      templates[t].push_back(synth_template(schema, t, c, size));
    }
  }

  const Rng root = Rng(config.seed).split("synth");
  std::vector<CaseRecord> records;
  records.reserve(config.cases);
  for (std::size_t i = 0; i < config.cases; ++i) {
    const Rng case_rng = root.split(static_cast<std::uint64_t>(i));
    CaseRecord rec;
    char id[32];
    std::snprintf(id, sizeof id, "synth-%05zu", i);
    rec.case_id = id;

    Rng label_rng = case_rng.split("labels");
    std::vector<double> signal(pixels, 0.0);
    for (std::size_t t = 0; t < schema.task_count(); ++t) {
      rec.labels[t] = sample_category(marginals[t], label_rng.uniform());
      const auto tv = templates[t][rec.labels[t]].values();
      for (std::size_t p = 0; p < pixels; ++p) signal[p] += tv[p];
    }

    auto render = [&](double snr, Rng noise_rng) {
      std::vector<double> img(pixels);
      for (std::size_t p = 0; p < pixels; ++p) {
        const double v = snr * signal[p] + config.noise_std * noise_rng.normal();
        img[p] = std::clamp(0.5 + config.intensity_scale * v, 0.0, 1.0);
      }
      return Tensor(Shape{size, size, kChannels}, std::move(img));
    };
    rec.clinical = render(config.clin_snr, case_rng.split("clinical"));
    rec.dermoscopy = render(config.derm_snr, case_rng.split("dermoscopy"));
    records.push_back(std::move(rec));
  }
  return records;
}

LabelVector nearest_template_labels(const Tensor& image, const TaskSchema& schema) {
  const auto& s = image.shape();
  if (s.rank() != 3 || s[0] != s[1] || s[2] != kChannels) {
    throw DimensionError("nearest_template_labels: expected square H x W x 3 image, got " + s.str());
  }
  const auto iv = image.values();
  LabelVector labels{};
  for (std::size_t t = 0; t < schema.task_count(); ++t) {
    double best = -INFINITY;
    for (std::size_t c = 0; c < schema.category_count(t); ++c) {
      const auto tmpl = synth_template(schema, t, c, s[0]);
      const auto tv = tmpl.values();
      double score = 0.0;
      for (std::size_t p = 0; p < iv.size(); ++p) score += (iv[p] - 0.5) * tv[p];
      if (score > best) {
        best = score;
        labels[t] = c;
      }
    }
  }
  return labels;
}

}  // namespace ammfm::data
