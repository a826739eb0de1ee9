// Copyright 2026 The dynfilt Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef DYNFILT_RANDOM_H_
#define DYNFILT_RANDOM_H_

#include <cstdint>
#include <random>
#include <span>

namespace dynfilt {

// Seeded generator with platform-independent real and integer draws.
// std::uniform_real_distribution is implementation-defined, so draws are
// derived from the raw 64-bit engine output instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t NextU64() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n); n must be positive.
  std::uint64_t Below(std::uint64_t n) { return engine_() % n; }
  // Standard normal via Box-Muller.
  double Normal();

  void FillUniform(std::span<double> out, double lo, double hi) {
    for (double& v : out) v = Uniform(lo, hi);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dynfilt

#endif  // DYNFILT_RANDOM_H_
