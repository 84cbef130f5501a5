#include "curvbco/barrier.hpp"
#include "curvbco/errors.hpp"
#include "curvbco/numerics.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace curvbco;
using curvbco::testing::random_spd;
using curvbco::testing::rel_err;

TEST_CASE("sym_eig on identity and diagonal") {
  const EigenDecomposition e = sym_eig(SymMatrix::identity(3));
  for (int i = 0; i < 3; ++i) CHECK(e.values(i) == doctest::Approx(1.0));

  const EigenDecomposition d = sym_eig(SymMatrix::diagonal(Eigen::Vector2d(4.0, 1.0)));
  CHECK(d.values(0) == doctest::Approx(1.0));
  CHECK(d.values(1) == doctest::Approx(4.0));
  CHECK(std::abs(d.vectors(1, 0)) == doctest::Approx(1.0));
  CHECK(std::abs(d.vectors(0, 1)) == doctest::Approx(1.0));
}

TEST_CASE("sym_eig reconstructs random symmetric matrices") {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 1 + trial % 12;
    Matrix m = random_spd(n, rng) - 2.0 * Matrix::Identity(n, n);  // indefinite too
    const SymMatrix s(m);
    const EigenDecomposition e = sym_eig(s);
    const Matrix rec = e.vectors * e.values.asDiagonal() * e.vectors.transpose();
    CHECK((rec - s.mat()).norm() <= 1e-10 * s.mat().norm());
    CHECK((e.vectors.transpose() * e.vectors - Matrix::Identity(n, n)).norm() <= 1e-10);
    for (Eigen::Index i = 1; i < n; ++i) CHECK(e.values(i - 1) <= e.values(i));
  }
}

TEST_CASE("SymMatrix rejects asymmetric input") {
  Matrix m(2, 2);
  m << 1.0, 0.5, 0.4, 1.0;
  CHECK_THROWS_AS(SymMatrix{m}, Error);
}

TEST_CASE("mat_pow closed forms") {
  for (double p : {0.5, -0.5, -1.0}) {
    CHECK(rel_err(mat_pow(SymMatrix::identity(4), p).mat(), Matrix::Identity(4, 4)) < 1e-14);
  }
  const SymMatrix r = mat_pow(SymMatrix::diagonal(Eigen::Vector2d(4.0, 9.0)), 0.5);
  CHECK(r(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(r(1, 1) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(std::abs(r(0, 1)) < 1e-14);
}

TEST_CASE("mat_pow round trips on 100 random SPD matrices") {
  Rng rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = 1 + trial % 12;
    const SymMatrix m(random_spd(n, rng));
    const SqrtPair r = sqrt_and_inv_sqrt(m);
    CHECK(rel_err(r.sqrt.mat() * r.sqrt.mat(), m.mat()) <= 1e-8);
    CHECK(rel_err(r.inv_sqrt.mat() * r.sqrt.mat(), Matrix::Identity(n, n)) <= 1e-8);
    CHECK(rel_err(r.inv_sqrt.mat() * m.mat() * r.inv_sqrt.mat(), Matrix::Identity(n, n)) <= 1e-8);
    CHECK(rel_err(mat_pow(m, -1.0).mat() * m.mat(), Matrix::Identity(n, n)) <= 1e-8);
  }
}

TEST_CASE("mat_pow rejects matrices that are not SPD") {
  CHECK_THROWS_AS(mat_pow(SymMatrix::diagonal(Eigen::Vector2d(1.0, -1.0)), 0.5),
                  ConditioningError);
  CHECK_THROWS_AS(mat_pow(SymMatrix::diagonal(Eigen::Vector2d(1.0, 1e-16)), -0.5),
                  ConditioningError);
}

TEST_CASE("local_norm") {
  CHECK(local_norm(Vector::Unit(3, 0), SymMatrix::identity(3)) == doctest::Approx(1.0));
  const SymMatrix m = SymMatrix::diagonal(Eigen::Vector2d(4.0, 1.0));
  const Vector v = Eigen::Vector2d(1.0, 0.0);
  CHECK(local_norm(v, m) == doctest::Approx(2.0));
  CHECK(local_norm(v, m, NormKind::kDual) == doctest::Approx(0.5));

  Rng rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const SymMatrix a(random_spd(4, rng));
    const Vector x = rng.normal_vector(4);
    // |x|_M = |M x|*_M
    CHECK(local_norm(x, a) == doctest::Approx(local_norm(a * x, a, NormKind::kDual)).epsilon(1e-10));
  }
  CHECK(local_norm(Vector::Zero(3), SymMatrix::identity(3)) == 0.0);
}

TEST_CASE("bisect_root") {
  CHECK(bisect_root([](double x) { return x - 0.5; }, 0.0, 1.0, 1e-12) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // Oracle: cube root of 2 to 17 digits.
  CHECK(std::abs(bisect_root([](double x) { return x * x * x - 2.0; }, 1.0, 2.0, 1e-13) -
                 1.2599210498948732) <= 1e-12);
  CHECK_THROWS_AS(bisect_root([](double x) { return x + 1.0; }, 0.0, 1.0, 1e-12),
                  BracketingError);
}

TEST_CASE("bisect iteration bound") {
  for (double tol : {1e-3, 1e-8, 1e-12}) {
    const BisectResult r = bisect([](double x) { return std::exp(x) - 3.0; }, -2.0, 5.0, tol);
    CHECK(r.iterations <= static_cast<int>(std::ceil(std::log2(7.0 / tol))) + 2);
    CHECK(std::abs(r.root - std::log(3.0)) <= tol);
  }
}

TEST_CASE("finite differences") {
  Rng rng(2);
  const Vector x = rng.normal_vector(3);
  const Vector g = fd_gradient([](const Vector& v) { return v.squaredNorm(); }, x, 1e-5);
  CHECK((g - 2.0 * x).norm() <= 1e-6);

  Matrix a = random_spd(3, rng);
  const SymMatrix h = fd_hessian([&](const Vector& v) { return 0.5 * v.dot(a * v); }, x, 1e-4);
  CHECK((h.mat() - a).norm() <= 1e-6 * std::max(1.0, a.norm()));

  const Barrier ball = Barrier::ball(3, 1.0);
  const Vector y = 0.5 * rng.unit_vector(3);
  const Vector fd = fd_gradient([&](const Vector& v) { return ball.value(v); }, y, 1e-5 * 1.5);
  CHECK((fd - ball.gradient(y)).norm() <= 1e-4 * ball.gradient(y).norm());
}
