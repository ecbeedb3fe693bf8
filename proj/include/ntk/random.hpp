#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ntk {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Counter-based generator: draw k of a stream is a pure function of (key, k),
/// so any partition of the counter range across threads yields the same values.
class CounterRng {
 public:
  explicit constexpr CounterRng(std::uint64_t seed) noexcept
      : key_(splitmix64(seed ^ 0x6A09E667F3BCC909ULL)) {}

  [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    return splitmix64(splitmix64(counter ^ key_) + key_);
  }

  /// Uniform on the open interval (0, 1).
  [[nodiscard]] double uniform(std::uint64_t counter) const noexcept {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal (Box-Muller, cosine branch) consuming counters 2k and 2k+1.
  [[nodiscard]] double normal(std::uint64_t counter) const noexcept {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Independent stream keyed by a tag (e.g. "anchors", "train", a repetition index).
  [[nodiscard]] constexpr CounterRng substream(std::uint64_t tag) const noexcept {
    return CounterRng(bits(~tag) ^ splitmix64(tag));
  }

 private:
  std::uint64_t key_;
};

/// Seed of an independent child stream, e.g. derive_seed(repetition_seed, stream::train).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
  return splitmix64(seed ^ splitmix64(tag + 0x3C6EF372FE94F82BULL));
}

/// Stream tags used across the library.
namespace stream {
inline constexpr std::uint64_t anchors = 0xA1;
inline constexpr std::uint64_t anchor_values = 0xA2;
inline constexpr std::uint64_t range_sample = 0xA3;
inline constexpr std::uint64_t train = 0xB1;
inline constexpr std::uint64_t evaluation = 0xB2;
inline constexpr std::uint64_t noise = 0xB3;
inline constexpr std::uint64_t candidates = 0xC1;
}  // namespace stream

}  // namespace ntk
