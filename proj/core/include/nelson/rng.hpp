#pragma once

// Philox4x32-10 counter-based generator (Salmon et al., SC'11) and the
// normal/uniform draws built on it.

#include <array>
#include <cstdint>

namespace nelson {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) noexcept;

/// Independent draw streams sharing one seed.
enum class Stream : std::uint32_t {
  increments = 0,
  initial = 1,
};

/// Draws keyed by (seed, stream, path, index). Stateless and thread-safe.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) noexcept
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

  std::uint64_t seed() const noexcept {
    return (static_cast<std::uint64_t>(key_[1]) << 32) | key_[0];
  }

  /// Two standard normals (Box-Muller) for the index pair {2*pair, 2*pair+1}.
  std::array<double, 2> normal_pair(Stream s, std::uint64_t path, std::uint32_t pair) const noexcept;

  /// Uniform in the open interval (0, 1) with 53-bit resolution.
  double uniform(Stream s, std::uint64_t path, std::uint32_t index) const noexcept;

  PhiloxCounter raw(Stream s, std::uint64_t path, std::uint32_t index) const noexcept {
    return philox4x32_10({index, static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(path),
                          static_cast<std::uint32_t>(path >> 32)},
                         key_);
  }

 private:
  PhiloxKey key_;
};

}  // namespace nelson
