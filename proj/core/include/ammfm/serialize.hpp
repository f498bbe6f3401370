#pragma once

#include <filesystem>
#include <iosfwd>

#include "ammfm/tensor.hpp"

namespace ammfm {

// Flat binary tensor layout, all integers and reals little-endian:
//
//   bytes 0-3   magic "AMMT"
//   u32         format version (1)
//   u32         rank R
//   u64 x R     dimensions
//   f64 x N     values in row-major order, N = product of dimensions
//
// Gradients and the requires_grad flag are not stored.

void write_tensor(std::ostream& out, const Tensor& tensor);
Tensor read_tensor(std::istream& in, bool requires_grad = false);

void save_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor load_tensor(const std::filesystem::path& path, bool requires_grad = false);

}  // namespace ammfm
