#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace lvggm {

/// Finalizer of the splitmix64 counter generator: a bijection on u64 with
/// strong avalanche, used both for output whitening and seed derivation.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Counter-based pseudo-random generator (splitmix64): the state is a
/// counter advanced by a fixed odd constant and each output is mix64 of the
/// counter. Deterministic, trivially splittable via seed derivation, and
/// cheap enough for desk-scale Monte Carlo.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform in [0, 1), 53-bit resolution.
  double next_uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  /// Uniform in (0, 1]; safe as a log() argument.
  double next_uniform_open() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller (paired, one spare cached).
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = next_uniform_open();
    const double u2 = next_uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  /// Unbiased-in-practice index in [0, n) via 128-bit multiply.
  std::uint64_t next_index(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

/// Derive a child seed from a base seed and a path of components
/// (experiment cell, trial index, purpose tag...). Hash-based, so derived
/// streams are independent of evaluation order and parallelism.
inline std::uint64_t derive_seed(std::uint64_t base,
                                 std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(base ^ 0xA0761D6478BD642FULL);
  for (std::uint64_t c : path) s = mix64(s ^ (c + 0x9E3779B97F4A7C15ULL));
  return s;
}

}  // namespace lvggm
