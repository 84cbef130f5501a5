#pragma once

#include "curvbco/numerics.hpp"

#include <cstdint>

namespace curvbco {

/// Counter-based 64-bit generator: the k-th draw is a SplitMix64 finalizer
/// applied to seed + k * golden gamma. The integer stream does not depend on
/// the standard library, unlike std::normal_distribution.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1), 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller (the second variate is cached).
  double normal();
  Vector normal_vector(Eigen::Index n);
  /// Uniform on the unit sphere S^{n-1}.
  Vector unit_vector(Eigen::Index n);
  /// Uniform in the ball of the given radius in R^n.
  Vector in_ball(Eigen::Index n, double radius);

  /// Independent stream derived from this seed and a label.
  Rng fork(std::uint64_t stream) const;

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace curvbco
