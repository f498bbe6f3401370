#include "ammfm/serialize.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

#include "ammfm/errors.hpp"

namespace ammfm {
namespace {

constexpr std::array<char, 4> kMagic{'A', 'M', 'M', 'T'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kMaxRank = 16;

template <typename U>
void put_le(std::ostream& out, U value) {
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) {
    bytes[i] = static_cast<char>((value >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename U>
U get_le(std::istream& in) {
  std::array<unsigned char, sizeof(U)> bytes{};
  in.read(reinterpret_cast<char*>(bytes.data()), bytes.size());
  if (!in) throw IngestionError("tensor stream truncated");
  U value = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) value |= static_cast<U>(bytes[i]) << (8 * i);
  return value;
}

}  // namespace

void write_tensor(std::ostream& out, const Tensor& tensor) {
  out.write(kMagic.data(), kMagic.size());
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(tensor.shape().rank()));
  for (auto d : tensor.shape().dims()) put_le<std::uint64_t>(out, d);
  for (double v : tensor.values()) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
}

Tensor read_tensor(std::istream& in, bool requires_grad) {
  std::array<char, 4> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) throw IngestionError("not a tensor file (bad magic)");
  const auto version = get_le<std::uint32_t>(in);
  if (version != kVersion) {
    throw IngestionError("unsupported tensor format version " + std::to_string(version));
  }
  const auto rank = get_le<std::uint32_t>(in);
  if (rank == 0 || rank > kMaxRank) throw IngestionError("bad tensor rank " + std::to_string(rank));
  std::vector<std::size_t> dims(rank);
  for (auto& d : dims) d = get_le<std::uint64_t>(in);
  Shape shape(std::move(dims));
  std::vector<double> values(shape.numel());
  for (auto& v : values) v = std::bit_cast<double>(get_le<std::uint64_t>(in));
  return Tensor(std::move(shape), std::move(values), requires_grad);
}

void save_tensor(const std::filesystem::path& path, const Tensor& tensor) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IngestionError("cannot open " + path.string() + " for writing");
  write_tensor(out, tensor);
  if (!out) throw IngestionError("failed writing " + path.string());
}

Tensor load_tensor(const std::filesystem::path& path, bool requires_grad) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestionError("cannot open tensor file " + path.string());
  try {
    return read_tensor(in, requires_grad);
  } catch (const IngestionError& e) {
    throw IngestionError(path.string() + ": " + e.what());
  } catch (const DimensionError& e) {
    throw IngestionError(path.string() + ": " + e.what());
  }
}

}  // namespace ammfm
