#include "curvbco/ftrl.hpp"

#include "curvbco/errors.hpp"

#include <cmath>
#include <limits>

namespace curvbco {

FtrlState FtrlState::initial(const Vector& y1, double lambda0, double eta1) {
  FtrlState s;
  s.grad_sum = Vector::Zero(y1.size());
  s.anchor_sum = Vector::Zero(y1.size());
  s.lambda0 = lambda0;
  s.lambda_sum = lambda0;
  s.eta_next = eta1;
  s.y_current = y1;
  return s;
}

double FtrlObjective::value(const Vector& x) const {
  const Vector z = lift_point(x);
  const double quad = state_.weight_sum + state_.lambda0;
  double v = state_.grad_sum.dot(z) + 0.5 * quad * z.squaredNorm() - state_.anchor_sum.dot(z) +
             nb_.value(z) / state_.eta_next;
  if (with_constant_) v += 0.5 * state_.anchor_sq_sum;
  return v;
}

Vector FtrlObjective::gradient(const Vector& x) const {
  const Eigen::Index d = x.size();
  const double quad = state_.weight_sum + state_.lambda0;
  const Vector barrier_grad = nb_.gradient(lift_point(x)).head(d);
  return state_.grad_sum.head(d) + quad * x - state_.anchor_sum.head(d) +
         barrier_grad / state_.eta_next;
}

SymMatrix FtrlObjective::hessian(const Vector& x) const {
  const Eigen::Index d = x.size();
  const double quad = state_.weight_sum + state_.lambda0;
  const Matrix block = nb_.hessian(lift_point(x)).mat().topLeftCorner(d, d);
  return SymMatrix(Matrix(block / state_.eta_next)).shifted(quad);
}

Vector damped_newton(const NewtonProblem& problem, Vector x, const NewtonOptions& options,
                     NewtonReport* report) {
  std::vector<double> trace;
  double fx = problem.value(x);
  for (int it = 0; it < options.max_iterations; ++it) {
    const Vector g = problem.gradient(x);
    const SymMatrix h = problem.hessian(x);
    Eigen::LLT<Matrix> llt(h.mat());
    if (llt.info() != Eigen::Success) {
      throw SolverError("Newton: Hessian is not positive definite", trace);
    }
    const Vector step = llt.solve(g);
    const double dec = std::sqrt(std::max(0.0, g.dot(step)));
    trace.push_back(dec);
    if (dec <= options.decrement_tol) {
      if (report) *report = {it, dec, std::move(trace)};
      return x;
    }
    // In the quadratic-convergence region of a self-concordant function the
    // full step stays feasible and contracts the decrement. There the
    // predicted decrease can be far below the rounding error of F, so an
    // Armijo test would reject good steps.
    const bool check_armijo = std::sqrt(problem.self_concordance_scale) * dec > 0.25;
    double alpha = 1.0;
    for (;;) {
      if (alpha < 1e-30) {
        throw SolverError("Newton: line search failed", trace);
      }
      const Vector cand = x - alpha * step;
      double fc;
      try {
        fc = problem.value(cand);
      } catch (const DomainViolation&) {
        alpha *= 0.5;
        continue;
      }
      if (!std::isfinite(fc) ||
          (check_armijo && fc > fx - options.armijo * alpha * dec * dec)) {
        alpha *= 0.5;
        continue;
      }
      const double ulps = 4.0 * std::numeric_limits<double>::epsilon() *
                          std::max(1.0, x.lpNorm<Eigen::Infinity>());
      if (alpha == 1.0 && (cand - x).lpNorm<Eigen::Infinity>() <= ulps) {
        // The step is at the spacing of doubles around x: no further
        // progress is representable.
        if (report) *report = {it, dec, std::move(trace)};
        return x;
      }
      x = cand;
      fx = fc;
      break;
    }
  }
  throw SolverError("Newton: no convergence within " + std::to_string(options.max_iterations) +
                        " iterations",
                    trace);
}

Vector analytic_start(const NormalBarrier& nb, NewtonReport* report) {
  const Eigen::Index d = nb.base().dim();
  NewtonProblem p{
      [&](const Vector& x) { return nb.value(lift_point(x)); },
      [&](const Vector& x) { return Vector(nb.gradient(lift_point(x)).head(d)); },
      [&](const Vector& x) {
        return SymMatrix(Matrix(nb.hessian(lift_point(x)).mat().topLeftCorner(d, d)));
      }};
  NewtonOptions opts;
  opts.decrement_tol = 1e-9;
  return lift_point(damped_newton(p, Vector::Zero(d), opts, report));
}

Vector ftrl_solve(const FtrlState& state, const NormalBarrier& nb, const NewtonOptions& options,
                  NewtonReport* report) {
  if (!(state.eta_next > 0.0)) {
    throw SolverError("ftrl_solve: learning rate must be positive");
  }
  const Eigen::Index d = nb.base().dim();
  const FtrlObjective obj(state, nb);
  NewtonProblem p{[&](const Vector& x) { return obj.value(x); },
                  [&](const Vector& x) { return obj.gradient(x); },
                  [&](const Vector& x) { return obj.hessian(x); }, state.eta_next};
  return lift_point(damped_newton(p, state.y_current.head(d), options, report));
}

SymMatrix compute_H(const NormalBarrier& nb, const Vector& y, double eta, double curvature_sum) {
  return nb.hessian(y).shifted(eta * curvature_sum);
}

void accumulate(FtrlState& state, const Vector& g, double sigma, double lambda, const Vector& y_t,
                LambdaRange range) {
  if (!(sigma >= 0.0)) {
    throw InvariantViolation("accumulate: sigma_t must be nonnegative");
  }
  const bool ok = range == LambdaRange::kOpenUnit ? (lambda > 0.0 && lambda < 1.0)
                                                 : (lambda >= 0.0 && lambda < 1.0);
  if (!ok) {
    throw InvariantViolation("accumulate: lambda_t = " + std::to_string(lambda) +
                             " outside the admissible range");
  }
  const double w = sigma + lambda;
  state.grad_sum += g;
  state.weight_sum += w;
  state.anchor_sum += w * y_t;
  state.anchor_sq_sum += w * y_t.squaredNorm();
  state.sigma_sum += sigma;
  state.lambda_sum += lambda;
  state.t += 1;
}

}  // namespace curvbco
