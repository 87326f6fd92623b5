#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace grlforge {

// SplitMix64 finalizer. All seed derivation in this project goes through
// this function so that every derived stream is reproducible bit-exactly:
//
//   mix64(x):
//     x ^= x >> 30;  x *= 0xBF58476D1CE4E5B9
//     x ^= x >> 27;  x *= 0x94D049BB133111EB
//     x ^= x >> 31
//
//   mix_seed(seed, i) = mix64(seed + (i + 1) * 0x9E3779B97F4A7C15)
//
// Per-item seeds, per-epoch shuffle seeds and retry seeds are all
// mix_seed chains of the single master seed.
inline std::uint64_t mix64(std::uint64_t x) {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ull;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBull;
  x ^= x >> 31;
  return x;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(seed + (index + 1) * 0x9E3779B97F4A7C15ull);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return mix_seed(mix_seed(seed, a), b);
}

// Deterministic random generator. mt19937_64 is fully specified by the
// standard; the value conversions below avoid std::uniform_*_distribution,
// whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(mix64(seed)) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform in [0, 1), 53-bit mantissa.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform index in [0, n); n == 0 returns 0.
  std::size_t index(std::size_t n) {
    if (n == 0) return 0;
    return static_cast<std::size_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Uniform integer in [lo, hi] inclusive.
  long range_int(long lo, long hi) {
    return lo + static_cast<long>(index(static_cast<std::size_t>(hi - lo + 1)));
  }

  // Fisher-Yates shuffle, high index first.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = index(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace grlforge
