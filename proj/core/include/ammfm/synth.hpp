#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "ammfm/dataset.hpp"
#include "ammfm/schema.hpp"
#include "ammfm/tensor.hpp"

namespace ammfm::data {

/// Paired-modality generator. Each (task, category) owns a fixed texture
/// template; an image is the sum of the templates of its labels scaled by the
/// modality's signal-to-noise ratio, plus Gaussian noise, mapped into [0, 1]
/// around mid-grey. Dermoscopy and clinical images carry the same label
/// information at different SNR.
struct SynthConfig {
  std::size_t cases = 200;
  /// Square images; must be a positive multiple of 4.
  std::size_t image_size = 32;
  double derm_snr = 0.75;
  double clin_snr = 0.1875;
  double noise_std = 1.0;
  /// Pixel = clamp(0.5 + intensity_scale * (signal + noise), 0, 1).
  double intensity_scale = 1.0 / 16.0;
  /// Per-task category probabilities; empty means the schema's reference
  /// marginals.
  std::vector<std::vector<double>> marginals;
  std::uint64_t seed = 0;

  /// Throws ConfigError on invalid values.
  void validate(const TaskSchema& schema) const;
};

/// Texture of one (task, category) on a size x size x 3 grid. Templates are
/// tiled 4x4 Walsh patterns on a single colour channel, entries +-1 there and
/// 0 elsewhere; distinct categories are exactly orthogonal.
Tensor synth_template(const TaskSchema& schema, std::size_t task, std::size_t category,
                      std::size_t size);

/// Deterministic in config.seed. Records carry no split tag.
std::vector<CaseRecord> synth_generate(const SynthConfig& config,
                                       const TaskSchema& schema = TaskSchema::spc());

/// Nearest-template decision for one image: per task, the category whose
/// template has the largest inner product with (image - 0.5).
LabelVector nearest_template_labels(const Tensor& image, const TaskSchema& schema);

}  // namespace ammfm::data
