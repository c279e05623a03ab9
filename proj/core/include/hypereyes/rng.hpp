#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

namespace hypereyes {

/// Mixes a 64-bit value (splitmix64 finalizer).
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Stable seed derivation: identical inputs give identical seeds on every platform.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept;
std::uint64_t derive_seed(std::uint64_t base, std::string_view label) noexcept;

/// 64-bit FNV-1a, used for artifact digests and string-keyed seeds.
std::uint64_t fnv1a64(std::string_view bytes) noexcept;

// Portable random source. std::mt19937_64's output sequence is fixed by the
// standard, but the std distributions are not, so sampling helpers live here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform double in [0, 1) with 53 bits of precision.
  double unit();

  bool bernoulli(double p) { return unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  template <typename T>
  const T& pick(std::span<const T> items) {
    return items[static_cast<std::size_t>(below(items.size()))];
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace hypereyes
