#pragma once

#include "curvbco/numerics.hpp"
#include "curvbco/rng.hpp"

#include <algorithm>
#include <cmath>

namespace curvbco::testing {

inline Matrix random_spd(Eigen::Index n, Rng& rng, double floor = 0.1) {
  Matrix b(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) b(i, j) = rng.normal();
  Matrix m = b * b.transpose() + floor * Matrix::Identity(n, n);
  return 0.5 * (m + m.transpose());
}

inline double rel_err(const Matrix& got, const Matrix& want) {
  return (got - want).norm() / std::max(1.0, want.norm());
}

}  // namespace curvbco::testing
