#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <utility>

namespace ammfm {

/// Counter-based generator (SplitMix64 over a keyed counter).
///
/// Streams are derived with split(): a child stream depends only on the parent
/// key and the name, never on how many values the parent has produced. Model
/// components, data generation and shuffling each draw from their own named
/// stream, so adding a component does not perturb the others.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  [[nodiscard]] Rng split(std::string_view name) const noexcept;
  [[nodiscard]] Rng split(std::uint64_t index) const noexcept;

  std::uint64_t next_u64() noexcept;
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller. Uses exactly two counter values per call.
  double normal() noexcept;
  /// Uniform integer in [0, n). n must be positive.
  std::size_t below(std::size_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) noexcept {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[below(i)]);
    }
  }

  [[nodiscard]] std::uint64_t key() const noexcept { return key_; }
  [[nodiscard]] std::uint64_t counter() const noexcept { return counter_; }

 private:
  Rng(std::uint64_t key, std::uint64_t counter) noexcept : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// FNV-1a, used to turn stream names into stable 64-bit tags.
std::uint64_t fnv1a64(std::string_view text) noexcept;

}  // namespace ammfm
