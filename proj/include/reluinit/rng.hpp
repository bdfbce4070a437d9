#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace reluinit {

/// SplitMix64 output function applied to a single 64-bit word.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

/// Seed of trial t in an experiment seeded with base.
constexpr std::uint64_t trial_seed(std::uint64_t base, std::uint64_t trial) noexcept {
  return mix64(base ^ mix64(trial));
}

/// Philox4x32-10 (Salmon et al., SC'11): a keyed bijection on 128-bit counters.
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;

  constexpr explicit Philox4x32(std::uint64_t key) noexcept
      : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  [[nodiscard]] constexpr Counter operator()(Counter ctr) const noexcept {
    std::array<std::uint32_t, 2> key = key_;
    for (int round = 0; round < 10; ++round) {
      ctr = single_round(ctr, key);
      key[0] += kWeyl0;
      key[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

  static constexpr Counter single_round(const Counter& c,
                                        const std::array<std::uint32_t, 2>& k) noexcept {
    const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
    const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
    const auto lo0 = static_cast<std::uint32_t>(p0);
    const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
    const auto lo1 = static_cast<std::uint32_t>(p1);
    return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
  }

  std::array<std::uint32_t, 2> key_;
};

/// Uniform in (0, 1] from the top 53 bits of a 64-bit word.
constexpr double to_unit_open_closed(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

/// Two independent standard normals addressed by (key, counter): Box-Muller on
/// one Philox block.
inline std::pair<double, double> normal_pair(const Philox4x32& gen,
                                             const Philox4x32::Counter& ctr) noexcept {
  const auto out = gen(ctr);
  const std::uint64_t w0 = (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
  const std::uint64_t w1 = (static_cast<std::uint64_t>(out[2]) << 32) | out[3];
  const double radius = std::sqrt(-2.0 * std::log(to_unit_open_closed(w0)));
  const double angle = 2.0 * std::numbers::pi * to_unit_open_closed(w1);
  return {radius * std::cos(angle), radius * std::sin(angle)};
}

}  // namespace reluinit
