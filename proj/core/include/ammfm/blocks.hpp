#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

#include "ammfm/rng.hpp"
#include "ammfm/tensor.hpp"

/// Modality interaction blocks: the asymmetric attention block (clinical
/// features steer an attention map that refines dermoscopy features), its
/// bidirectional counterpart, and plain concatenation.
namespace ammfm::blocks {

enum class FusionBlock { Cat, Bab, Aab };

std::string_view to_string(FusionBlock block) noexcept;
/// Accepts "cat", "bab", "aab" (any case).
FusionBlock parse_fusion_block(std::string_view text);

/// 1x1 convolution parameters mapping C_in -> C_out channels.
struct PointwiseConv {
  Tensor weight;  // C_in x C_out
  Tensor bias;    // C_out

  [[nodiscard]] std::size_t in_channels() const { return weight.shape()[0]; }
  [[nodiscard]] std::size_t out_channels() const { return weight.shape()[1]; }
  [[nodiscard]] std::size_t param_count() const { return weight.numel() + bias.numel(); }
  [[nodiscard]] Tensor apply(const Tensor& feature_map) const;

  static PointwiseConv zeros(std::size_t in_channels, std::size_t out_channels);
  static PointwiseConv identity(std::size_t channels);
  /// Normal weights with standard deviation sqrt(gain / C_in); zero bias.
  static PointwiseConv random(std::size_t in_channels, std::size_t out_channels, Rng rng,
                              double gain = 1.0);
};

/// Parameters of one asymmetric attention block at channel width C.
/// Keys and queries are projected from the clinical map, values from the
/// dermoscopy map; all three projections are C -> C.
struct AttentionParams {
  PointwiseConv proj_k;
  PointwiseConv proj_q;
  PointwiseConv proj_v;
  /// Divide attention logits by sqrt(C). Off by default.
  bool scaled_logits = false;

  [[nodiscard]] std::size_t channels() const { return proj_v.out_channels(); }
  /// Exactly 3 * (C^2 + C).
  [[nodiscard]] std::size_t param_count() const;
  [[nodiscard]] std::vector<Tensor> tensors() const;

  /// Random keys/queries; the value projection is zero when `zero_value` is
  /// set, so a fresh block starts as the identity on the dermoscopy path.
  static AttentionParams init(std::size_t channels, Rng rng, bool zero_value);
};

struct AttentionState {
  Tensor attention_map;  // N x N, N = H * W; rows sum to one
};

struct AabOutput {
  Tensor refined;  // same shape as the dermoscopy input
  AttentionState state;
};

/// refined = reshape(M . V) + D with M = softmax_rows(Q . K^T),
/// Q = proj_q(C), K = proj_k(C), V = proj_v(D), all flattened to N x C.
/// `clinical` and `dermoscopy` must have identical H x W x C shapes.
AabOutput aab_forward(const Tensor& clinical, const Tensor& dermoscopy,
                      const AttentionParams& params);

/// Two independent attention blocks, one per enhancement direction.
struct BabParams {
  AttentionParams clinical_to_dermoscopy;  // clinical steers, dermoscopy refined
  AttentionParams dermoscopy_to_clinical;  // dermoscopy steers, clinical refined

  /// Exactly 6 * (C^2 + C) when both directions share C.
  [[nodiscard]] std::size_t param_count() const;
  static BabParams init(std::size_t channels, Rng rng, bool zero_value);
};

struct BabOutput {
  Tensor refined_clinical;
  Tensor refined_dermoscopy;
  AttentionState clinical_to_dermoscopy;
  AttentionState dermoscopy_to_clinical;
};

/// Both directions read the unrefined inputs; each adds its own residual.
BabOutput bab_forward(const Tensor& clinical, const Tensor& dermoscopy, const BabParams& params);

/// Channel-wise concatenation of two embeddings.
Tensor cat_fuse(const Tensor& clinical_embedding, const Tensor& dermoscopy_embedding);
/// Degenerate configurations may carry no clinical embedding.
Tensor cat_fuse(const Tensor* clinical_embedding, const Tensor& dermoscopy_embedding);

/// Learnable scalar count of a block at channel width C (0 for CAT).
std::size_t block_param_count(FusionBlock block, std::size_t channels);

}  // namespace ammfm::blocks
