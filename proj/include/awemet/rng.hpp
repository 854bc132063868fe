// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cassert>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace awemet {

// splitmix64 finalizer; used to derive independent seed streams.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Named sub-streams so that e.g. dropout draws never perturb initialization.
enum class Stream : std::uint64_t {
  Lexicon = 1,
  Prototypes = 2,
  Render = 3,
  Split = 4,
  Init = 5,
  BatchOrder = 6,
  Dropout = 7,
  PairSample = 8,
  Grid = 9,
  Audit = 10,
  Subsample = 11,
};

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a = 0,
                                 std::uint64_t b = 0, std::uint64_t c = 0,
                                 std::uint64_t d = 0) {
  std::uint64_t s = mix64(seed);
  s = mix64(s ^ a);
  s = mix64(s ^ b);
  s = mix64(s ^ c);
  s = mix64(s ^ d);
  return s;
}

inline std::uint64_t derive_seed(std::uint64_t seed, Stream tag,
                                 std::uint64_t b = 0, std::uint64_t c = 0,
                                 std::uint64_t d = 0) {
  return derive_seed(seed, static_cast<std::uint64_t>(tag), b, c, d);
}

// mt19937_64 with hand-rolled conversions so draws are platform-stable and
// unbiased (std::*_distribution layouts are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // uniform in [0, 1)
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // unbiased integer in [0, n)
  std::uint64_t uniform_index(std::uint64_t n) {
    assert(n > 0);
    const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t x = next_u64();
      if (x >= threshold) return x % n;
    }
  }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    assert(hi >= lo);
    return lo + static_cast<int>(uniform_index(
                    static_cast<std::uint64_t>(hi - lo) + 1));
  }

  // Box-Muller; two fresh draws per call, no cached state.
  double normal() {
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[uniform_index(i)]);
    }
  }

  // Fisher-Yates prefix: after the call, v[0..k) is a uniform k-subset in
  // uniform random order.
  template <typename T>
  void partial_shuffle(std::vector<T>& v, std::size_t k) {
    assert(k <= v.size());
    for (std::size_t i = 0; i < k; ++i) {
      std::swap(v[i], v[i + uniform_index(v.size() - i)]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace awemet
