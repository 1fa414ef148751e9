// Copyright (C) 2026 SecurePose Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace sp {

inline uint64_t splitmix64(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Deterministic PRNG with a fixed algorithm so generated datasets are
/// reproducible across compilers and standard libraries.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {
    // Warm up so nearby seeds diverge immediately.
    splitmix64(state_);
    splitmix64(state_);
  }

  uint64_t next_u64() { return splitmix64(state_); }

  /// Uniform in [0, 1).
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  /// Uniform integer in [0, n).
  uint64_t next_below(uint64_t n) {
    return uint64_t((__uint128_t(next_u64()) * n) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Derive an independent stream for a named purpose.
  Rng fork(std::string_view tag) const {
    uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) h = (h ^ uint64_t(uint8_t(c))) * 0x100000001b3ULL;
    return Rng(state_ ^ h);
  }

 private:
  uint64_t state_;
};

}  // namespace sp
