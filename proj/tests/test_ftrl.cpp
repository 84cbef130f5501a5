#include "curvbco/errors.hpp"
#include "curvbco/ftrl.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>

using namespace curvbco;

namespace {

FtrlState sample_state(const NormalBarrier& nb, Rng& rng, long rounds, double eta) {
  const Eigen::Index d = nb.base().dim();
  FtrlState s = FtrlState::initial(analytic_start(nb), 3.0, eta);
  for (long t = 0; t < rounds; ++t) {
    Vector g = rng.normal_vector(d + 1);
    const Vector y = lift_point(0.5 * nb.base().domain().sample(rng));
    accumulate(s, g, rng.uniform(0.0, 2.0), rng.uniform(0.01, 0.99), y);
  }
  return s;
}

}  // namespace

TEST_CASE("analytic center") {
  const NormalBarrier ball(Barrier::ball(3, 1.0));
  const Vector y = analytic_start(ball);
  CHECK(y.size() == 4);
  CHECK(y.head(3).norm() < 1e-9);
  CHECK(y(3) == 1.0);

  // [-1, 3]: -ln(3 - x) - ln(1 + x) is minimized at x = 1
  Matrix a(2, 1);
  a << 1.0, -1.0;
  const NormalBarrier seg(Barrier::polytope(a, Eigen::Vector2d(3.0, 1.0)));
  CHECK(analytic_start(seg)(0) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("ftrl_solve matches a grid search in one dimension") {
  const NormalBarrier nb(Barrier::ball(1, 1.0));
  FtrlState s = FtrlState::initial(analytic_start(nb), 2.0, 0.05);
  accumulate(s, Eigen::Vector2d(-30.0, 4.0), 1.0, 0.5, Eigen::Vector2d(0.2, 1.0));
  accumulate(s, Eigen::Vector2d(-25.0, -1.0), 0.0, 0.3, Eigen::Vector2d(0.4, 1.0));
  const Vector y = ftrl_solve(s, nb);
  const FtrlObjective obj(s, nb);
  double best_x = 0.0, best_v = INFINITY;
  for (int i = -99999; i <= 99999; ++i) {
    const double x = i * 1e-5;
    const double v = obj.value(Vector::Constant(1, x));
    if (v < best_v) best_v = v, best_x = x;
  }
  CHECK(y(0) == doctest::Approx(best_x).epsilon(2e-5));
  CHECK(obj.value(y.head(1)) <= best_v + 1e-9);
  CHECK(y(0) > 0.0);  // negative gradient pulls the leader to the right
}

TEST_CASE("ftrl_solve returns the minimizer") {
  Rng rng(8);
  for (const Barrier& b : {Barrier::ball(3, 1.0), Barrier::ball(2, 2.0)}) {
    const NormalBarrier nb(b);
    for (double eta : {1e-3, 0.1, 10.0}) {
      const FtrlState s = sample_state(nb, rng, 25, eta);
      NewtonReport rep;
      const Vector y = ftrl_solve(s, nb, {}, &rep);
      CHECK(rep.decrement <= 1e-8);
      CHECK(b.domain().contains(y.head(b.dim())).strictly_interior);
      const FtrlObjective obj(s, nb);
      const double fy = obj.value(y.head(b.dim()));
      for (int k = 0; k < 200; ++k) {
        const Vector x = b.domain().sample(rng) * 0.999;
        CHECK(obj.value(x) >= fy - 1e-9 * std::max(1.0, std::abs(fy)));
      }
      // determinism
      CHECK(ftrl_solve(s, nb) == y);
    }
  }
}

TEST_CASE("the dropped constant does not move the minimizer") {
  Rng rng(12);
  const NormalBarrier nb(Barrier::ball(2, 1.0));
  const FtrlState s = sample_state(nb, rng, 10, 0.2);
  const FtrlObjective bare(s, nb), full(s, nb, true);
  for (int k = 0; k < 20; ++k) {
    const Vector x = 0.9 * nb.base().domain().sample(rng);
    CHECK(full.value(x) - bare.value(x) == doctest::Approx(0.5 * s.anchor_sq_sum));
    CHECK((full.gradient(x) - bare.gradient(x)).norm() == 0.0);
  }
  // full quadratic sum_s w_s/2 |y - y_s|^2 expanded against the explicit form
  const Vector x = Eigen::Vector2d(0.1, -0.2);
  CHECK((full.gradient(x) -
         fd_gradient([&](const Vector& v) { return full.value(v); }, x, 1e-6))
            .norm() <= 1e-4 * std::max(1.0, full.gradient(x).norm()));
  CHECK((full.hessian(x).mat() -
         fd_hessian([&](const Vector& v) { return full.value(v); }, x, 1e-4).mat())
            .norm() <= 1e-4 * full.hessian(x).mat().norm());
}

TEST_CASE("compute_H") {
  const NormalBarrier nb(Barrier::ball(2, 1.0));
  const Vector c = lift_point(Vector::Zero(2));
  const SymMatrix h = compute_H(nb, c, 0.0, 0.0);
  CHECK((h.mat() - 800.0 * Matrix::Identity(3, 3)).norm() < 1e-10);
  const SymMatrix h2 = compute_H(nb, c, 0.5, 6.0);
  CHECK((h2.mat() - 803.0 * Matrix::Identity(3, 3)).norm() < 1e-10);
}

TEST_CASE("accumulate") {
  FtrlState s = FtrlState::initial(Eigen::Vector2d(0.0, 1.0), 4.0, 0.1);
  CHECK(s.lambda_sum == 4.0);
  accumulate(s, Eigen::Vector2d(1.0, 2.0), 1.0, 0.5, Eigen::Vector2d(0.2, 1.0));
  accumulate(s, Eigen::Vector2d(-1.0, 1.0), 0.0, 0.25, Eigen::Vector2d(-0.4, 1.0));
  CHECK(s.t == 2);
  CHECK(s.grad_sum == Eigen::Vector2d(0.0, 3.0));
  CHECK(s.weight_sum == doctest::Approx(1.75));
  CHECK(s.sigma_sum == 1.0);
  CHECK(s.lambda_sum == doctest::Approx(4.75));
  CHECK(s.anchor_sum(0) == doctest::Approx(1.5 * 0.2 - 0.25 * 0.4));
  CHECK(s.anchor_sum(1) == doctest::Approx(1.75));
  CHECK(s.anchor_sq_sum == doctest::Approx(1.5 * 1.04 + 0.25 * 1.16));

  const Vector g = Eigen::Vector2d(0.0, 0.0), y = Eigen::Vector2d(0.0, 1.0);
  CHECK_THROWS_AS(accumulate(s, g, 0.0, 1.5, y), InvariantViolation);
  CHECK_THROWS_AS(accumulate(s, g, 0.0, 1.0, y), InvariantViolation);
  CHECK_THROWS_AS(accumulate(s, g, 0.0, 0.0, y), InvariantViolation);
  CHECK_THROWS_AS(accumulate(s, g, -0.1, 0.5, y), InvariantViolation);
  CHECK(s.t == 2);
  CHECK_NOTHROW(accumulate(s, g, 0.0, 0.0, y, LambdaRange::kZeroAllowed));
  CHECK(s.t == 3);
}

TEST_CASE("damped Newton") {
  // x - ln x, minimum at 1
  NewtonProblem p{[](const Vector& x) {
                    if (x(0) <= 0.0) throw DomainViolation("x <= 0", x(0));
                    return x(0) - std::log(x(0));
                  },
                  [](const Vector& x) { return Vector::Constant(1, 1.0 - 1.0 / x(0)); },
                  [](const Vector& x) {
                    return SymMatrix(Matrix::Constant(1, 1, 1.0 / (x(0) * x(0))));
                  }};
  NewtonReport rep;
  const Vector x = damped_newton(p, Vector::Constant(1, 50.0), {}, &rep);
  CHECK(x(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(rep.iterations < 30);
  // the decrement history ends with quadratic contraction
  REQUIRE(rep.decrements.size() >= 3);
  const size_t n = rep.decrements.size();
  CHECK(rep.decrements[n - 1] <= 4.0 * rep.decrements[n - 2] * rep.decrements[n - 2] + 1e-15);

  NewtonOptions tight;
  tight.max_iterations = 2;
  CHECK_THROWS_AS(damped_newton(p, Vector::Constant(1, 1e6), tight), SolverError);
}

TEST_CASE("ftrl_solve converges for large learning rates") {
  Rng rng(99);
  const NormalBarrier nb(Barrier::ball(2, 1.0));
  for (double eta : {1.0, 30.0, 300.0}) {
    FtrlState s = sample_state(nb, rng, 200, eta);
    NewtonReport rep;
    CHECK_NOTHROW(ftrl_solve(s, nb, {}, &rep));
    CHECK(rep.iterations < 200);
  }
  FtrlState bad = FtrlState::initial(Eigen::Vector3d(0.0, 0.0, 1.0), 1.0, 0.0);
  CHECK_THROWS_AS(ftrl_solve(bad, nb), SolverError);
}
