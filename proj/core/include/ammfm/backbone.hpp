#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ammfm/blocks.hpp"
#include "ammfm/rng.hpp"
#include "ammfm/tensor.hpp"

namespace ammfm::model {

enum class BackboneKind { Light, Heavy };

std::string_view to_string(BackboneKind kind) noexcept;

/// Multi-stage convolutional extractor. Stage s opens with a 3x3 convolution
/// of stride `stage_strides[s]` into `stage_widths[s]` channels followed by
/// `stage_depths[s] - 1` residual 3x3 blocks (x + relu(conv(x))).
struct BackboneConfig {
  std::string name = "custom";
  BackboneKind kind = BackboneKind::Heavy;
  std::vector<std::size_t> stage_widths;
  std::vector<std::size_t> stage_strides;
  std::vector<std::size_t> stage_depths;
  std::size_t input_channels = 3;

  [[nodiscard]] std::size_t stage_count() const noexcept { return stage_widths.size(); }
  /// Throws ConfigError: fewer than 2 stages, zero widths/strides/depths,
  /// decreasing widths or mismatched list lengths.
  void validate() const;
  /// Exact learnable scalar count, computed from the configuration alone.
  [[nodiscard]] std::size_t param_count() const;
  /// Output shape of each stage for an H x W input.
  [[nodiscard]] std::vector<Shape> stage_shapes(std::size_t height, std::size_t width) const;

  /// "toy-light", "toy-heavy" or "toy-heavy-wide". The light/heavy parameter
  /// ratio sits in [9, 11].
  static BackboneConfig preset(std::string_view name);
  static std::vector<std::string> preset_names();

  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

struct ConvLayer {
  Tensor weight;  // 3 x 3 x C_in x C_out
  Tensor bias;    // C_out
  std::size_t stride = 1;
  bool residual = false;
};

class Backbone {
 public:
  /// He-normal initialisation from `rng`; residual branches are scaled down
  /// by 1/sqrt(depth - 1) so activations stay bounded through deep stages.
  static Backbone build(const BackboneConfig& config, Rng rng);

  [[nodiscard]] const BackboneConfig& config() const noexcept { return config_; }
  [[nodiscard]] std::size_t stage_count() const noexcept { return stages_.size(); }
  [[nodiscard]] Tensor run_stage(std::size_t stage, const Tensor& input) const;
  /// Output of every stage, in order.
  [[nodiscard]] std::vector<Tensor> forward(const Tensor& image) const;
  [[nodiscard]] std::size_t param_count() const;
  [[nodiscard]] std::vector<std::pair<std::string, Tensor>> named_parameters(
      const std::string& prefix) const;

 private:
  BackboneConfig config_;
  std::vector<std::vector<ConvLayer>> stages_;
};

/// Maps a feature map onto a target H x W x C: average pooling or
/// nearest-neighbour repetition per spatial axis, then an optional learnable
/// 1x1 projection.
struct Align {
  std::size_t height = 1;
  std::size_t width = 1;
  std::optional<blocks::PointwiseConv> projection;

  [[nodiscard]] Tensor apply(const Tensor& feature_map) const;
  [[nodiscard]] std::size_t param_count() const {
    return projection ? projection->param_count() : 0;
  }

  /// Projection present iff channel counts differ; random initialisation.
  static Align between(const Shape& from, const Shape& to, Rng rng);
};

/// Free-function form: resize `feature_map` to target H x W, then apply the
/// projection when given (otherwise channels must already match).
Tensor align(const Tensor& feature_map, const Shape& target,
             const blocks::PointwiseConv* projection);

}  // namespace ammfm::model
