#include "curvbco/rng.hpp"

#include <cmath>
#include <numbers>

namespace curvbco {

namespace {

constexpr std::uint64_t kGamma = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
  ++counter_;
  return mix(seed_ + counter_ * kGamma);
}

double Rng::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

Vector Rng::normal_vector(Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = normal();
  return v;
}

Vector Rng::unit_vector(Eigen::Index n) {
  for (;;) {
    Vector v = normal_vector(n);
    const double norm = v.norm();
    if (norm > 1e-300) return v / norm;
  }
}

Vector Rng::in_ball(Eigen::Index n, double radius) {
  const Vector dir = unit_vector(n);
  return dir * (radius * std::pow(uniform(), 1.0 / static_cast<double>(n)));
}

Rng Rng::fork(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + kGamma))); }

}  // namespace curvbco
