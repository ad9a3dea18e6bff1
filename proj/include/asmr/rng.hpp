#ifndef ASMR_RNG_HPP_
#define ASMR_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace asmr {

// Seeded random source with hand-rolled distributions. std::mt19937_64 output
// is pinned by the standard, and avoiding std::*_distribution keeps the draw
// sequence identical across standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Standard normal via Box-Muller; uses two draws per sample.
  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  bool bernoulli(double p) { return uniform01() < p; }

  int bit() { return static_cast<int>(next_u64() >> 63); }

  // Uniform integer in [0, n), n >= 1. Modulo bias is irrelevant at the
  // small n used here.
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

 private:
  std::mt19937_64 gen_;
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Stable derivation of sub-seeds from a base seed and a label/index pair,
// e.g. one seed per (model class, simulation) or per (iteration, subject).
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                 std::uint64_t index) {
  return splitmix64(splitmix64(base ^ fnv1a64(label)) ^ index);
}

}  // namespace asmr

#endif  // ASMR_RNG_HPP_
