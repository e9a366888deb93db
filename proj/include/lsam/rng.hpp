#pragma once

#include <cstdint>

namespace lsam {

// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t splitmix_finalize(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Derive an independent stream seed from a tuple of words. Replicate
// streams must never be seeded sequentially; they are derived through
// these mixes so results do not depend on scheduling order.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept {
  std::uint64_t h = splitmix_finalize(a + 0x9E3779B97F4A7C15ULL);
  return splitmix_finalize(h ^ (b + 0x3C6EF372FE94F82AULL));
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b,
                                 std::uint64_t c) noexcept {
  return splitmix_finalize(mix_seed(a, b) ^ (c + 0x61C8864680B583EBULL));
}

// xoshiro256++ generator with a 128-layer ziggurat normal sampler.
// Deterministic for a given seed; no global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept;

  std::uint64_t next_u64() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() noexcept { return double(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in (0, 1); safe under log().
  double uniform_open() noexcept {
    return (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal draw (ziggurat; Marsaglia-Tsang layout).
  double normal() noexcept;

  // Uniform integer in [0, bound), bound >= 1, rejection method.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  double normal_tail(bool negative) noexcept;

  std::uint64_t s_[4];
};

}  // namespace lsam
