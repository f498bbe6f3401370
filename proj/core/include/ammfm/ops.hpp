#pragma once

#include <cstddef>

#include "ammfm/tensor.hpp"

/// Differentiable operations. Feature maps are H x W x C tensors (channels
/// last). No broadcasting except the bias add inside conv/fully_connected;
/// every other operand pair must agree in shape exactly.
namespace ammfm::ops {

Tensor add(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double factor);
Tensor sum(const Tensor& a);
Tensor relu(const Tensor& a);

/// Same values, new shape. numel must match.
Tensor reshape(const Tensor& a, Shape shape);
/// Transpose of a rank-2 tensor.
Tensor transpose(const Tensor& a);
/// (M x K) . (K x P) -> M x P
Tensor matmul(const Tensor& a, const Tensor& b);
/// Softmax along the last axis, computed with max subtraction.
/// Throws NumericError on non-finite input.
Tensor softmax(const Tensor& a);
/// -log softmax(logits)[target] for a rank-1 logit vector.
Tensor cross_entropy(const Tensor& logits, std::size_t target);

/// Pointwise convolution: H x W x Cin, weight Cin x Cout, bias Cout.
Tensor conv1x1(const Tensor& input, const Tensor& weight, const Tensor& bias);
/// 3x3 convolution with zero padding 1: H x W x Cin, weight 3x3xCinxCout,
/// bias Cout. Output is ceil(H/stride) x ceil(W/stride) x Cout.
Tensor conv3x3(const Tensor& input, const Tensor& weight, const Tensor& bias,
               std::size_t stride);
/// H x W x C -> C
Tensor global_avg_pool(const Tensor& input);
/// D -> K via weight D x K and bias K.
Tensor fully_connected(const Tensor& input, const Tensor& weight, const Tensor& bias);
/// Concatenation along the last axis; all leading axes must agree.
Tensor concat(const Tensor& a, const Tensor& b);
/// Spatial resize of an H x W x C map. Per axis: average pooling when
/// shrinking, nearest-neighbour repetition when growing. Factors must be
/// integral.
Tensor resize_spatial(const Tensor& input, std::size_t height, std::size_t width);

}  // namespace ammfm::ops
