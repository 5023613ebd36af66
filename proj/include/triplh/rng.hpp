#pragma once

#include <cstdint>
#include <random>

namespace triplh {

using Rng = std::mt19937_64;

/// Uniform integer in [0, n) by rejection. Unlike
/// std::uniform_int_distribution the sequence is fixed across standard
/// libraries, which the determinism contract relies on.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  constexpr std::uint64_t max = Rng::max();
  const std::uint64_t excess = (max % n + 1) % n;  // 2^64 mod n
  if (excess == 0) return rng() % n;
  const std::uint64_t limit = max - excess;
  for (;;) {
    const std::uint64_t r = rng();
    if (r <= limit) return r % n;
  }
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform_unit(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace triplh
