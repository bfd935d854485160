#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace delayvax {

// Splittable counter-style generator used everywhere determinism matters.
// std::* distributions are implementation-defined, so all samplers below are
// spelled out and produce identical streams on every platform.
//
// Stream discipline: a master seed is hashed together with a path of indices
// (run index, attempt index, ...) to open an independent stream. Draws within
// a stream happen in a fixed, documented order.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Strictly positive: the uniform lies in the open interval (0, 1), so the
  // result is never 0 and never infinite. Infection arrival times along a
  // path are therefore strictly increasing.
  double exponential(double rate) {
    double u = (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    return -std::log(u) / rate;
  }

  // Uniform integer in [0, bound); bound must be >= 1. Multiply-shift mapping,
  // bias is below 2^-53 for the small bounds used here.
  std::uint64_t uniform_below(std::uint64_t bound) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  // Knuth product-of-uniforms method; fine for the small means used here.
  int poisson(double mean) {
    double limit = std::exp(-mean);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform01();
    } while (p > limit);
    return k - 1;
  }

 private:
  std::uint64_t state_;
};

namespace detail {
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

// Hash-combines a seed with a path of indices into an independent stream seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = detail::mix64(seed ^ 0x2545f4914f6cdd1dULL);
  for (std::uint64_t p : path) h = detail::mix64(h ^ (p + 0x9e3779b97f4a7c15ULL));
  return h;
}

inline SplitMix64 derive_stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  return SplitMix64(derive_seed(seed, path));
}

}  // namespace delayvax
