#include "ammfm/blocks.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>

#include "ammfm/errors.hpp"
#include "ammfm/ops.hpp"

namespace ammfm::blocks {

std::string_view to_string(FusionBlock block) noexcept {
  switch (block) {
    case FusionBlock::Cat: return "cat";
    case FusionBlock::Bab: return "bab";
    case FusionBlock::Aab: return "aab";
  }
  return "?";
}

FusionBlock parse_fusion_block(std::string_view text) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "cat") return FusionBlock::Cat;
  if (lower == "bab") return FusionBlock::Bab;
  if (lower == "aab") return FusionBlock::Aab;
  throw ConfigError("unknown fusion block '" + std::string(text) + "' (expected cat, bab or aab)");
}

Tensor PointwiseConv::apply(const Tensor& feature_map) const {
  return ops::conv1x1(feature_map, weight, bias);
}

PointwiseConv PointwiseConv::zeros(std::size_t in_channels, std::size_t out_channels) {
  return {Tensor::parameter(Shape{in_channels, out_channels},
                            std::vector<double>(in_channels * out_channels, 0.0)),
          Tensor::parameter(Shape{out_channels}, std::vector<double>(out_channels, 0.0))};
}

PointwiseConv PointwiseConv::identity(std::size_t channels) {
  auto conv = zeros(channels, channels);
  auto w = conv.weight.mutable_values();
  for (std::size_t i = 0; i < channels; ++i) w[i * channels + i] = 1.0;
  return conv;
}

PointwiseConv PointwiseConv::random(std::size_t in_channels, std::size_t out_channels, Rng rng,
                                    double gain) {
  auto conv = zeros(in_channels, out_channels);
  const double stddev = std::sqrt(gain / static_cast<double>(in_channels));
  for (auto& v : conv.weight.mutable_values()) v = stddev * rng.normal();
  return conv;
}

std::size_t AttentionParams::param_count() const {
  return proj_k.param_count() + proj_q.param_count() + proj_v.param_count();
}

std::vector<Tensor> AttentionParams::tensors() const {
  return {proj_k.weight, proj_k.bias, proj_q.weight, proj_q.bias, proj_v.weight, proj_v.bias};
}

AttentionParams AttentionParams::init(std::size_t channels, Rng rng, bool zero_value) {
  AttentionParams p{
      PointwiseConv::random(channels, channels, rng.split("proj_k")),
      PointwiseConv::random(channels, channels, rng.split("proj_q")),
      zero_value ? PointwiseConv::zeros(channels, channels)
                 : PointwiseConv::random(channels, channels, rng.split("proj_v")),
  };
  return p;
}

AabOutput aab_forward(const Tensor& clinical, const Tensor& dermoscopy,
                      const AttentionParams& params) {
  const auto& cs = clinical.shape();
  const auto& ds = dermoscopy.shape();
  if (cs.rank() != 3 || ds.rank() != 3) {
    throw DimensionError("aab_forward: inputs must be H x W x C feature maps, got " + cs.str() +
                         " and " + ds.str());
  }
  for (std::size_t axis = 0; axis < 3; ++axis) {
    if (cs[axis] != ds[axis]) {
      throw DimensionError("aab_forward: clinical and dermoscopy maps differ on axis " +
                           std::to_string(axis) + " (" + cs.str() + " vs " + ds.str() + ")");
    }
  }
  if (params.channels() != cs[2]) {
    throw DimensionError("aab_forward: block width " + std::to_string(params.channels()) +
                         " does not match feature axis 2 (" + std::to_string(cs[2]) + ")");
  }
  const auto n = cs[0] * cs[1];
  const auto c = cs[2];
  const Shape flat{n, c};

  const auto keys = ops::reshape(params.proj_k.apply(clinical), flat);
  const auto queries = ops::reshape(params.proj_q.apply(clinical), flat);
  const auto values = ops::reshape(params.proj_v.apply(dermoscopy), flat);

  auto logits = ops::matmul(queries, ops::transpose(keys));
  if (params.scaled_logits) logits = ops::scale(logits, 1.0 / std::sqrt(static_cast<double>(c)));
  const auto attention = ops::softmax(logits);
  const auto attended = ops::reshape(ops::matmul(attention, values), ds);
  return {ops::add(attended, dermoscopy), {attention}};
}

std::size_t BabParams::param_count() const {
  return clinical_to_dermoscopy.param_count() + dermoscopy_to_clinical.param_count();
}

BabParams BabParams::init(std::size_t channels, Rng rng, bool zero_value) {
  return {AttentionParams::init(channels, rng.split("c2d"), zero_value),
          AttentionParams::init(channels, rng.split("d2c"), zero_value)};
}

BabOutput bab_forward(const Tensor& clinical, const Tensor& dermoscopy, const BabParams& params) {
  auto to_derm = aab_forward(clinical, dermoscopy, params.clinical_to_dermoscopy);
  auto to_clin = aab_forward(dermoscopy, clinical, params.dermoscopy_to_clinical);
  return {std::move(to_clin.refined), std::move(to_derm.refined), std::move(to_derm.state),
          std::move(to_clin.state)};
}

Tensor cat_fuse(const Tensor& clinical_embedding, const Tensor& dermoscopy_embedding) {
  return ops::concat(clinical_embedding, dermoscopy_embedding);
}

Tensor cat_fuse(const Tensor* clinical_embedding, const Tensor& dermoscopy_embedding) {
  if (clinical_embedding == nullptr) return ops::reshape(dermoscopy_embedding, dermoscopy_embedding.shape());
  return cat_fuse(*clinical_embedding, dermoscopy_embedding);
}

std::size_t block_param_count(FusionBlock block, std::size_t channels) {
  const auto per_projection = channels * channels + channels;
  switch (block) {
    case FusionBlock::Cat: return 0;
    case FusionBlock::Aab: return 3 * per_projection;
    case FusionBlock::Bab: return 6 * per_projection;
  }
  return 0;
}

}  // namespace ammfm::blocks
