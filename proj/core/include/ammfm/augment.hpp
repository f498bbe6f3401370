#pragma once

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include "ammfm/rng.hpp"
#include "ammfm/tensor.hpp"

/// Image augmentations on H x W x C maps. Every function returns a new
/// constant tensor and leaves its input untouched.
namespace ammfm::augment {

Tensor flip_horizontal(const Tensor& image);
Tensor flip_vertical(const Tensor& image);
/// Counter-clockwise rotation by quarter_turns * 90 degrees. Non-square
/// images swap height and width on odd turns.
Tensor rotate90(const Tensor& image, int quarter_turns);
/// Integer translation with zero fill. Positive dy moves content down,
/// positive dx moves it right.
Tensor shift(const Tensor& image, int dy, int dx);
/// Bilinear zoom about the centre; output keeps the input size. Samples
/// outside the source read as zero.
Tensor scale(const Tensor& image, double factor);
/// Multiplies every value by `factor`, clamped to [0, 1].
Tensor brighten(const Tensor& image, double factor);

struct AugmentConfig {
  bool flip = false;
  bool shift = false;
  bool scale = false;
  bool rotate = false;
  bool brighten = false;
  /// Chance of applying each enabled augmentation.
  double probability = 0.5;
  int max_shift = 2;
  double scale_range = 0.1;
  double brightness_range = 0.1;

  [[nodiscard]] bool any() const noexcept { return flip || shift || scale || rotate || brighten; }
  void validate() const;
};

/// Draws one set of random transforms and applies it to both images of a
/// pair, so the modalities stay spatially registered.
std::pair<Tensor, Tensor> augment_pair(const Tensor& clinical, const Tensor& dermoscopy,
                                       const AugmentConfig& config, Rng rng);

/// Deterministic transforms used at test time.
enum class TtaTransform { Identity, FlipHorizontal, FlipVertical, Rotate90, Rotate180, Rotate270 };

std::string_view to_string(TtaTransform transform) noexcept;
TtaTransform parse_tta_transform(std::string_view text);
Tensor apply(TtaTransform transform, const Tensor& image);
/// Identity plus both flips.
std::vector<TtaTransform> default_tta();

}  // namespace ammfm::augment
