#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <vector>

namespace skyloc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Combines a seed with stream keys so that independent streams (per query,
/// per cell, per epoch) can be drawn without shared mutable state.
inline std::uint64_t derive_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> keys) {
  std::uint64_t h = splitmix64(seed);
  for (std::uint64_t k : keys) h = splitmix64(h ^ splitmix64(k));
  return h;
}

// Counter-based generator: output i is splitmix64(state + i). All toolkit
// randomness flows through this type; std distributions are avoided because
// their sequences are implementation-defined.
class StreamRng {
 public:
  explicit StreamRng(std::uint64_t seed) : counter_(splitmix64(seed)) {}
  StreamRng(std::uint64_t seed, std::initializer_list<std::uint64_t> keys)
      : counter_(derive_seed(seed, keys)) {}

  std::uint64_t next_u64() { return splitmix64(counter_++); }

  /// Uniform double in [0, 1).
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * next_double();
  }

  /// Uniform index in [0, n). n must be positive.
  std::size_t bounded(std::size_t n) {
    return static_cast<std::size_t>(next_u64() % n);
  }

  /// Standard normal via Box-Muller (deterministic across platforms).
  double normal() {
    const double u1 = 1.0 - next_double();  // (0, 1]
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

 private:
  std::uint64_t counter_;
};

/// Fisher-Yates with the toolkit generator; std::shuffle is not reproducible
/// across standard libraries.
template <class T>
void shuffle(std::vector<T>& values, StreamRng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = rng.bounded(i);
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace skyloc
