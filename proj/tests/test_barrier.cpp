#include "curvbco/barrier.hpp"
#include "curvbco/errors.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace curvbco;

namespace {

Barrier box(Eigen::Index d) {
  Matrix a(2 * d, d);
  a << Matrix::Identity(d, d), -Matrix::Identity(d, d);
  return Barrier::polytope(a, Vector::Ones(2 * d));
}

}  // namespace

TEST_CASE("ball barrier closed forms") {
  const Barrier b = Barrier::ball(3, 1.0);
  CHECK(b.nu() == 1.0);
  CHECK(b.value(Vector::Zero(3)) == doctest::Approx(0.0));
  CHECK(b.gradient(Vector::Zero(3)).norm() == doctest::Approx(0.0));
  CHECK((b.hessian(Vector::Zero(3)).mat() - 2.0 * Matrix::Identity(3, 3)).norm() < 1e-14);

  const Vector x = 0.999 * Vector::Unit(3, 1);
  // -ln(1 - 0.998001)
  CHECK(b.value(x) == doctest::Approx(6.215108).epsilon(1e-6));

  const Barrier r2 = Barrier::ball(2, 2.0);
  const Vector y = Eigen::Vector2d(1.0, 1.0);
  CHECK(r2.value(y) == doctest::Approx(-std::log(2.0)));
  CHECK((r2.gradient(y) - y).norm() < 1e-14);  // 2x / (r^2 - |x|^2)
}

TEST_CASE("box barrier closed forms") {
  const Barrier b = box(1);
  CHECK(b.nu() == 2.0);
  const Vector x = Vector::Constant(1, 0.5);
  CHECK(b.value(x) == doctest::Approx(-std::log(0.5) - std::log(1.5)).epsilon(1e-14));
  CHECK(b.value(x) == doctest::Approx(0.28768).epsilon(1e-4));
  CHECK(b.gradient(x)(0) == doctest::Approx(1.0 / 0.5 - 1.0 / 1.5));
  CHECK(b.hessian(x)(0, 0) == doctest::Approx(1.0 / 0.25 + 1.0 / 2.25));
  CHECK(box(5).nu() == 10.0);
}

TEST_CASE("barrier blows up at the boundary and rejects outside points") {
  const Barrier ball = Barrier::ball(2, 1.0);
  double prev = ball.value(Vector::Zero(2));
  for (double s : {0.9, 0.99, 0.999, 0.9999, 0.99999}) {
    const double v = ball.value(s * Vector::Unit(2, 0));
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev > 10.0);
  CHECK_THROWS_AS(ball.value(Vector::Unit(2, 0)), DomainViolation);
  CHECK_THROWS_AS(ball.gradient(1.5 * Vector::Unit(2, 0)), DomainViolation);
  CHECK_THROWS_AS(box(2).value(Eigen::Vector2d(0.0, -1.0)), DomainViolation);
}

TEST_CASE("analytic derivatives match finite differences") {
  Rng rng(3);
  for (const Barrier& b : {Barrier::ball(2, 1.0), Barrier::ball(5, 2.0), box(3)}) {
    const NormalBarrier nb(b);
    for (int k = 0; k < 20; ++k) {
      const Vector x = 0.8 * b.domain().sample(rng);
      const Vector g = b.gradient(x);
      const Vector fd = fd_gradient([&](const Vector& v) { return b.value(v); }, x, 1e-6);
      CHECK((fd - g).norm() <= 1e-4 * std::max(1.0, g.norm()));
      const SymMatrix h = b.hessian(x);
      const Matrix fdh = fd_hessian([&](const Vector& v) { return b.value(v); }, x, 1e-4).mat();
      CHECK((fdh - h.mat()).norm() <= 1e-4 * std::max(1.0, h.mat().norm()));

      const Vector z = lift_point(x) * rng.uniform(0.5, 2.0);
      const Vector gz = nb.gradient(z);
      const Vector fdz = fd_gradient([&](const Vector& v) { return nb.value(v); }, z, 1e-6);
      CHECK((fdz - gz).norm() <= 1e-4 * gz.norm());
    }
  }
}

TEST_CASE("normal barrier at the lifted center") {
  const NormalBarrier nb(Barrier::ball(1, 1.0));
  const Vector z = Eigen::Vector2d(0.0, 1.0);
  CHECK(nb.nu_bar() == 800.0);
  CHECK(nb.value(z) == doctest::Approx(0.0));
  const Vector g = nb.gradient(z);
  CHECK(g(0) == doctest::Approx(0.0));
  CHECK(g(1) == doctest::Approx(-800.0));
  CHECK(lift_point(Vector::Constant(1, 0.3)) == Eigen::Vector2d(0.3, 1.0));
}

TEST_CASE("normal barrier matches its definition") {
  Rng rng(17);
  const Barrier b = box(2);
  const NormalBarrier nb(b);
  for (int k = 0; k < 20; ++k) {
    const Vector x = 0.9 * b.domain().sample(rng);
    const double s = rng.uniform(0.2, 3.0);
    Vector z(3);
    z << s * x, s;
    const double want = 400.0 * (b.value(x) - 2.0 * b.nu() * std::log(s));
    CHECK(nb.value(z) == doctest::Approx(want).epsilon(1e-12));
  }
  CHECK_THROWS_AS(nb.value(Eigen::Vector3d(0.0, 0.0, -1.0)), DomainViolation);
  CHECK_THROWS_AS(nb.value(Eigen::Vector3d(2.0, 0.0, 1.0)), DomainViolation);
}

TEST_CASE("logarithmic homogeneity identities") {
  Rng rng(23);
  for (Eigen::Index d : {1, 2, 5}) {
    for (const Barrier& b : {Barrier::ball(d, 1.0), box(d)}) {
      const NormalBarrier nb(b);
      for (int k = 0; k < 30; ++k) {
        const Vector z = lift_point(b.domain().sample(rng)) * rng.uniform(0.3, 3.0);
        if (!b.domain().contains(z.head(d) / z(d)).strictly_interior) continue;
        const BarrierEval e = nb.eval(z);
        CHECK((e.hessian * z + e.gradient).norm() <= 1e-8 * e.gradient.norm());
        CHECK(std::abs(z.dot(e.hessian * z) - nb.nu_bar()) <= 1e-8 * nb.nu_bar());
        const double dual = e.gradient.dot(e.hessian.mat().ldlt().solve(e.gradient));
        CHECK(std::abs(dual - nb.nu_bar()) <= 1e-8 * nb.nu_bar());
      }
    }
  }
}

TEST_CASE("minkowski gauge") {
  const Domain ball = Domain::ball(2, 1.0);
  const Vector o = Vector::Zero(2);
  CHECK(minkowski(ball, o, 0.5 * Vector::Unit(2, 0)) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(minkowski(ball, o, 0.8 * Vector::Unit(2, 1)) == doctest::Approx(0.8).epsilon(1e-9));
  CHECK(minkowski(ball, o, o) == doctest::Approx(0.0));
  // pole 0.5 e1, target 0.75 e1: halfway to the boundary point e1
  CHECK(minkowski(ball, 0.5 * Vector::Unit(2, 0), 0.75 * Vector::Unit(2, 0)) ==
        doctest::Approx(0.5).epsilon(1e-9));
  CHECK_THROWS_AS(minkowski(ball, 2.0 * Vector::Unit(2, 0), o), DomainViolation);
}

TEST_CASE("domain membership") {
  const Domain ball = Domain::ball(2, 1.0);
  CHECK(ball.contains(Vector::Zero(2)).strictly_interior);
  CHECK(ball.contains(Vector::Zero(2)).slack == doctest::Approx(1.0));
  CHECK(ball.contains(Vector::Unit(2, 0)).feasible);
  CHECK_FALSE(ball.contains(Vector::Unit(2, 0)).strictly_interior);
  CHECK_FALSE(ball.contains(1.01 * Vector::Unit(2, 0)).feasible);

  const Domain b = box(2).domain();
  CHECK(b.contains(Eigen::Vector2d(0.5, -0.5)).slack == doctest::Approx(0.5));
  CHECK_FALSE(b.contains(Eigen::Vector2d(1.5, 0.0)).feasible);
  CHECK(b.vertices().size() == 4);
  CHECK(b.max_norm() == doctest::Approx(std::sqrt(2.0)));
  CHECK(b.diameter() == doctest::Approx(2.0 * std::sqrt(2.0)));
  CHECK(ball.diameter() == doctest::Approx(2.0));
}

TEST_CASE("domain projection and sampling") {
  Rng rng(4);
  const Domain ball = Domain::ball(3, 2.0);
  CHECK((ball.project(Eigen::Vector3d(4.0, 0.0, 0.0)) - Eigen::Vector3d(2.0, 0.0, 0.0)).norm() <
        1e-14);
  const Domain b = box(2).domain();
  CHECK((b.project(Eigen::Vector2d(3.0, 0.2)) - Eigen::Vector2d(1.0, 0.2)).norm() < 1e-6);
  for (int k = 0; k < 1000; ++k) {
    CHECK(ball.contains(ball.sample(rng)).feasible);
    CHECK(b.contains(b.sample(rng)).feasible);
  }
}

TEST_CASE("invalid domains") {
  CHECK_THROWS_AS(Domain::ball(2, 0.0), ConfigError);
  CHECK_THROWS_AS(Domain::ball(0, 1.0), ConfigError);
  Matrix a(1, 1);
  a << 1.0;
  CHECK_THROWS_AS(Domain::polytope(a, Vector::Ones(1)), ConfigError);  // unbounded
  Matrix a2(2, 1);
  a2 << 1.0, -1.0;
  CHECK_THROWS_AS(Domain::polytope(a2, Eigen::Vector2d(-0.5, 1.0)), ConfigError);  // origin outside
  Matrix a3(3, 2);  // open toward the direction (1, 1)
  a3 << -1.0, 0.0, 0.0, -1.0, 1.0, -1.0;
  CHECK_THROWS_AS(Domain::polytope(a3, Vector::Ones(3)), ConfigError);
  CHECK_NOTHROW(Domain::polytope(a2, Vector::Ones(2)));
}
