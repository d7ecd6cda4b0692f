#pragma once

#include <array>
#include <cstdint>

#include "normal.hpp"

namespace fracsmooth {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as
/// easy as 1, 2, 3"). Stateless: the output depends only on (counter, key).
class Philox4x32 {
 public:
  using Counter = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  static Counter block(Counter ctr, Key key) {
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kW0;
        key[1] += kW1;
      }
      const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
      const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
      const auto lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
      const auto lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kM0 = 0xD2511F53u;
  static constexpr std::uint32_t kM1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kW0 = 0x9E3779B9u;
  static constexpr std::uint32_t kW1 = 0xBB67AE85u;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Derives an independent 64-bit seed from a master seed and a label.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t label) {
  return splitmix64(splitmix64(master) ^ (label * 0xD1B54A32D192ED03ull + 1));
}

/// Independent random streams sharing one (seed, path) key.
enum class Stream : std::uint32_t { brownian = 0, mixing = 1 };

/// Counter-based generator keyed by (seed, path, step, stream). No state is
/// carried between draws, so any draw can be recomputed in isolation.
class CounterRng {
 public:
  static std::uint64_t bits(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                            Stream stream = Stream::brownian) {
    const Philox4x32::Key key{static_cast<std::uint32_t>(seed),
                              static_cast<std::uint32_t>(seed >> 32)};
    const Philox4x32::Counter ctr{static_cast<std::uint32_t>(step),
                                  static_cast<std::uint32_t>(step >> 32) ^
                                      (static_cast<std::uint32_t>(stream) << 16),
                                  static_cast<std::uint32_t>(path),
                                  static_cast<std::uint32_t>(path >> 32)};
    const auto out = Philox4x32::block(ctr, key);
    return (std::uint64_t{out[1]} << 32) | out[0];
  }

  /// Uniform on the open interval (0,1) with 53 random bits.
  static double uniform(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                        Stream stream = Stream::brownian) {
    return (static_cast<double>(bits(seed, path, step, stream) >> 11) + 0.5) * 0x1.0p-53;
  }

  static double normal(std::uint64_t seed, std::uint64_t path, std::uint64_t step,
                       Stream stream = Stream::brownian) {
    return norm_quantile(uniform(seed, path, step, stream));
  }
};

/// Default source of standard normal draws for path simulation.
struct CounterNormal {
  double operator()(std::uint64_t seed, std::uint64_t path, std::uint64_t step) const {
    return CounterRng::normal(seed, path, step);
  }
};

}  // namespace fracsmooth
