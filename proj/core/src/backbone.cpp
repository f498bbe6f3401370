#include "ammfm/backbone.hpp"

#include <cmath>

#include "ammfm/errors.hpp"
#include "ammfm/ops.hpp"

namespace ammfm::model {
namespace {

std::size_t conv3x3_params(std::size_t in, std::size_t out) { return 9 * in * out + out; }

}  // namespace

std::string_view to_string(BackboneKind kind) noexcept {
  return kind == BackboneKind::Light ? "light" : "heavy";
}

void BackboneConfig::validate() const {
  if (stage_widths.size() < 2) {
    throw ConfigError("backbone '" + name + "': needs at least 2 stages");
  }
  if (stage_strides.size() != stage_widths.size() || stage_depths.size() != stage_widths.size()) {
    throw ConfigError("backbone '" + name + "': widths, strides and depths must have equal length");
  }
  if (input_channels == 0) throw ConfigError("backbone '" + name + "': zero input channels");
  for (std::size_t s = 0; s < stage_widths.size(); ++s) {
    const auto tag = "backbone '" + name + "' stage " + std::to_string(s);
    if (stage_widths[s] == 0) throw ConfigError(tag + ": zero width");
    if (stage_strides[s] == 0) throw ConfigError(tag + ": zero stride");
    if (stage_depths[s] == 0) throw ConfigError(tag + ": zero depth");
    if (s > 0 && stage_widths[s] < stage_widths[s - 1]) {
      throw ConfigError(tag + ": widths must be non-decreasing");
    }
  }
}

std::size_t BackboneConfig::param_count() const {
  std::size_t total = 0;
  std::size_t in = input_channels;
  for (std::size_t s = 0; s < stage_widths.size(); ++s) {
    total += conv3x3_params(in, stage_widths[s]);
    total += (stage_depths[s] - 1) * conv3x3_params(stage_widths[s], stage_widths[s]);
    in = stage_widths[s];
  }
  return total;
}

std::vector<Shape> BackboneConfig::stage_shapes(std::size_t height, std::size_t width) const {
  std::vector<Shape> shapes;
  for (std::size_t s = 0; s < stage_widths.size(); ++s) {
    height = (height + stage_strides[s] - 1) / stage_strides[s];
    width = (width + stage_strides[s] - 1) / stage_strides[s];
    shapes.push_back(Shape{height, width, stage_widths[s]});
  }
  return shapes;
}

BackboneConfig BackboneConfig::preset(std::string_view name) {
  // The heavy presets concentrate capacity in a deep final stage at the
  // lowest resolution, so attention blocks stay small relative to the
  // dermoscopy backbone.
  if (name == "toy-light") {
    return {"toy-light", BackboneKind::Light, {8, 16, 18}, {2, 2, 2}, {1, 1, 1}};
  }
  if (name == "toy-heavy") {
    return {"toy-heavy", BackboneKind::Heavy, {8, 12, 24}, {2, 2, 2}, {1, 1, 8}};
  }
  if (name == "toy-heavy-wide") {
    return {"toy-heavy-wide", BackboneKind::Heavy, {8, 16, 28}, {2, 2, 2}, {1, 1, 5}};
  }
  throw ConfigError("unknown backbone preset '" + std::string(name) + "'");
}

std::vector<std::string> BackboneConfig::preset_names() {
  return {"toy-light", "toy-heavy", "toy-heavy-wide"};
}

Backbone Backbone::build(const BackboneConfig& config, Rng rng) {
  config.validate();
  Backbone bb;
  bb.config_ = config;
  std::size_t in = config.input_channels;
  for (std::size_t s = 0; s < config.stage_count(); ++s) {
    const auto width = config.stage_widths[s];
    const auto depth = config.stage_depths[s];
    std::vector<ConvLayer> layers;
    for (std::size_t l = 0; l < depth; ++l) {
      const auto cin = l == 0 ? in : width;
      const bool residual = l > 0;
      double stddev = std::sqrt(2.0 / static_cast<double>(9 * cin));
      if (residual) stddev /= std::sqrt(static_cast<double>(depth - 1));
      Rng layer_rng = rng.split("s" + std::to_string(s) + ".c" + std::to_string(l));
      std::vector<double> w(9 * cin * width);
      for (auto& v : w) v = stddev * layer_rng.normal();
      layers.push_back({Tensor::parameter(Shape{3, 3, cin, width}, std::move(w)),
                        Tensor::parameter(Shape{width}, std::vector<double>(width, 0.0)),
                        l == 0 ? config.stage_strides[s] : 1, residual});
    }
    bb.stages_.push_back(std::move(layers));
    in = width;
  }
  return bb;
}

Tensor Backbone::run_stage(std::size_t stage, const Tensor& input) const {
  Tensor x = input;
  for (const auto& layer : stages_.at(stage)) {
    auto y = ops::relu(ops::conv3x3(x, layer.weight, layer.bias, layer.stride));
    x = layer.residual ? ops::add(x, y) : y;
  }
  return x;
}

std::vector<Tensor> Backbone::forward(const Tensor& image) const {
  std::vector<Tensor> outputs;
  Tensor x = image;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    x = run_stage(s, x);
    outputs.push_back(x);
  }
  return outputs;
}

std::size_t Backbone::param_count() const {
  std::size_t n = 0;
  for (const auto& stage : stages_)
    for (const auto& l : stage) n += l.weight.numel() + l.bias.numel();
  return n;
}

std::vector<std::pair<std::string, Tensor>> Backbone::named_parameters(
    const std::string& prefix) const {
  std::vector<std::pair<std::string, Tensor>> out;
  for (std::size_t s = 0; s < stages_.size(); ++s) {
    for (std::size_t l = 0; l < stages_[s].size(); ++l) {
      const auto base = prefix + ".s" + std::to_string(s) + ".c" + std::to_string(l);
      out.emplace_back(base + ".weight", stages_[s][l].weight);
      out.emplace_back(base + ".bias", stages_[s][l].bias);
    }
  }
  return out;
}

Tensor align(const Tensor& feature_map, const Shape& target,
             const blocks::PointwiseConv* projection) {
  if (target.rank() != 3 || feature_map.shape().rank() != 3) {
    throw DimensionError("align: feature map and target must be H x W x C");
  }
  auto x = ops::resize_spatial(feature_map, target[0], target[1]);
  if (projection) {
    if (projection->out_channels() != target[2]) {
      throw DimensionError("align: projection emits " + std::to_string(projection->out_channels()) +
                           " channels but target axis 2 is " + std::to_string(target[2]));
    }
    return projection->apply(x);
  }
  if (feature_map.shape()[2] != target[2]) {
    throw DimensionError("align: channel axis 2 differs (" + feature_map.shape().str() + " vs " +
                         target.str() + ") and no projection was given");
  }
  return x;
}

Tensor Align::apply(const Tensor& feature_map) const {
  const auto channels =
      projection ? projection->out_channels() : feature_map.shape()[feature_map.shape().rank() - 1];
  return align(feature_map, Shape{height, width, channels}, projection ? &*projection : nullptr);
}

Align Align::between(const Shape& from, const Shape& to, Rng rng) {
  Align a;
  a.height = to[0];
  a.width = to[1];
  if (from[2] != to[2]) a.projection = blocks::PointwiseConv::random(from[2], to[2], rng);
  return a;
}

}  // namespace ammfm::model
