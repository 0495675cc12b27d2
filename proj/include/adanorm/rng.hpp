#pragma once

#include <array>
#include <cstdint>

namespace adanorm {

inline constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Hashes a parent seed with a purpose tag into an unrelated child seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t a = seed;
  std::uint64_t b = tag ^ 0xD1B54A32D192ED03ULL;
  return splitmix64(a) ^ (splitmix64(b) * 0xA0761D6478BD642FULL);
}

/// Identifies one reproducible random stream: one per outer Monte Carlo draw,
/// bootstrap replicate, permutation or simulation replicate.
struct SeededStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_index = 0;

  friend constexpr bool operator==(const SeededStream&, const SeededStream&) = default;
};

/// xoshiro256++ whose state is filled by splitmix64 from a mix of
/// (seed, stream_index). Bit-identical on every platform.
class Xoshiro256pp {
 public:
  constexpr explicit Xoshiro256pp(SeededStream stream) {
    std::uint64_t x = derive_seed(stream.seed, stream.stream_index);
    for (auto& word : s_) word = splitmix64(x);
  }

  constexpr std::uint64_t next() {
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

  /// Uniform on the open interval (0, 1): 53-bit grid shifted by half a step.
  constexpr double uniform_open() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }

  /// Uniform integer in [0, bound) by rejection, so every value is exactly equally likely.
  constexpr std::uint64_t bounded(std::uint64_t bound) {
    const std::uint64_t limit = bound == 0 ? 0 : (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= limit) return r % bound;
    }
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::array<std::uint64_t, 4> s_{};
};

}  // namespace adanorm
