// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

namespace fillmass {

/// Seeded generator whose draws are identical on every standard library.
///
/// std::mt19937_64 is bit-specified by the standard, but the distribution
/// adaptors are not, so uniform/normal/integer draws are derived here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n);

  /// Standard normal via Box-Muller (caches the second variate).
  double normal();

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Exponential with the given rate.
  double exponential(double rate);

  /// Child stream for an independent sub-task (tree i, sequence i, ...).
  Rng fork(std::uint64_t stream) const;

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// splitmix64 finalizer, used to derive well-mixed child seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace fillmass
