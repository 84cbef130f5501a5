#pragma once

#include "curvbco/barrier.hpp"
#include "curvbco/numerics.hpp"

#include <functional>
#include <vector>

namespace curvbco {

/// Running statistics of the lifted FTRL problem after t rounds. All lifted
/// vectors live in R^{d+1}.
struct FtrlState {
  long t = 0;
  Vector grad_sum;          // sum_s g_s
  double weight_sum = 0.0;  // sigma_{1:t} + lambda_{1:t}
  Vector anchor_sum;        // sum_s (sigma_s + lambda_s) y_s
  double anchor_sq_sum = 0.0;  // sum_s (sigma_s + lambda_s) |y_s|^2, the dropped constant
  double lambda0 = 0.0;
  double eta_next = 0.0;    // eta_{t+1}
  Vector y_current;         // y_t, last coordinate 1
  double sigma_sum = 0.0;   // sigma_{1:t}
  double lambda_sum = 0.0;  // lambda_{0:t}

  static FtrlState initial(const Vector& y1, double lambda0, double eta1);
};

/// Leader objective restricted to the slice b = 1, as a function of x in R^d:
///   <G, (x,1)> + (S + lambda0)/2 |(x,1)|^2 - <P, (x,1)> + Psi(x,1) / eta
/// plus, optionally, the constant sum (sigma_s+lambda_s)|y_s|^2 / 2.
class FtrlObjective {
 public:
  FtrlObjective(const FtrlState& state, const NormalBarrier& nb, bool with_constant = false)
      : state_(state), nb_(nb), with_constant_(with_constant) {}

  double value(const Vector& x) const;
  Vector gradient(const Vector& x) const;
  SymMatrix hessian(const Vector& x) const;

 private:
  const FtrlState& state_;
  const NormalBarrier& nb_;
  bool with_constant_;
};

struct NewtonOptions {
  double decrement_tol = 1e-8;
  int max_iterations = 200;
  double armijo = 1e-4;
};

struct NewtonReport {
  int iterations = 0;
  double decrement = 0.0;
  std::vector<double> decrements;
};

/// Smooth convex objective on an open domain; value() must throw
/// DomainViolation outside it.
struct NewtonProblem {
  std::function<double(const Vector&)> value;
  std::function<Vector(const Vector&)> gradient;
  std::function<SymMatrix(const Vector&)> hessian;
  /// c > 0 such that c * F is self-concordant (eta for the leader objective).
  double self_concordance_scale = 1.0;
};

/// Damped Newton with backtracking: the step is halved while it leaves the
/// domain or fails the Armijo test. Once the normalized decrement
/// sqrt(c) * lambda is at most 1/4 the full step is taken without Armijo.
/// Stops at Newton decrement <= tol, or when a full step moves x by only a
/// few ulps.
Vector damped_newton(const NewtonProblem& problem, Vector x0, const NewtonOptions& options,
                     NewtonReport* report = nullptr);

/// y_1 = argmin Psi(x, 1), returned lifted.
Vector analytic_start(const NormalBarrier& nb, NewtonReport* report = nullptr);

/// y_{t+1}: argmin of the leader objective with eta = state.eta_next, warm
/// started from state.y_current. Returned lifted.
Vector ftrl_solve(const FtrlState& state, const NormalBarrier& nb,
                  const NewtonOptions& options = {}, NewtonReport* report = nullptr);

/// H = hess Psi(y) + eta * curvature_sum * I.
SymMatrix compute_H(const NormalBarrier& nb, const Vector& y, double eta,
                    double curvature_sum);

enum class LambdaRange { kOpenUnit, kZeroAllowed };

/// Adds round t's data: G += g, S += sigma+lambda, P += (sigma+lambda) y_t.
/// lambda must lie in (0,1), or [0,1) with kZeroAllowed.
void accumulate(FtrlState& state, const Vector& g, double sigma, double lambda,
                const Vector& y_t, LambdaRange range = LambdaRange::kOpenUnit);

}  // namespace curvbco
