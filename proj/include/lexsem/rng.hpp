#pragma once

#include <cstdint>
#include <random>

namespace lexsem {

/// mt19937_64 with hand-rolled output mapping so streams are identical
/// across standard library implementations (std::uniform_real_distribution
/// is not portable).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) { return next() % n; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace lexsem
