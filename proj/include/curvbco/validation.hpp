#pragma once

#include "curvbco/algorithms.hpp"
#include "curvbco/barrier.hpp"
#include "curvbco/environments.hpp"
#include "curvbco/harness.hpp"

#include <string>
#include <vector>

namespace curvbco {

using PropertyCheck = EnvCheck;

// ---------------------------------------------------------------- unbiasedness

struct UnbiasednessReport {
  Vector mean;       // empirical mean of g, first d coordinates
  Vector std_error;  // sample std / sqrt(N)
  Vector oracle;     // grad f(y) + lambda y
  long samples = 0;
  bool pass = false;  // |mean_i - oracle_i| <= 3 std_error_i for all i <= d
};

/// Draws N gradient estimates at a fixed lifted point y and matrix H for the
/// loss f and regularization lambda. The last (lifted) coordinate is not
/// checked.
UnbiasednessReport mc_unbiasedness(const Quadratic& f, double lambda, const Vector& y_lifted,
                                   const SymMatrix& h, long samples, Rng& rng);

// ---------------------------------------------------------------- stability

struct StabilityAudit {
  long rounds = 0;
  double max_norm = 0.0;
  long violations = 0;             // rounds with norm > threshold
  std::vector<long> first_violations;  // up to 100 round indices
  bool asserted = false;           // default constants and T >= rho
  std::string instantiation;       // which constants the stability bound uses

  bool pass() const { return !asserted || violations == 0; }
};

StabilityAudit stability_audit(const Trace& trace, double threshold = 0.5);

// ---------------------------------------------------------------- tuning

enum class TuningKind { kSmooth, kLipschitz };

/// B(lambda) = lambda_{1:t} + sum_tau k / (sigma_{1:tau} + lambda_{0:tau})^p with
/// k = d sqrt(beta+1), p = 1/2 (smooth) or k = (d (L+1))^{2/3}, p = 1/3
/// (lipschitz).
struct TuningObjective {
  TuningKind kind = TuningKind::kSmooth;
  long d = 1;
  double param = 0.0;  // beta or L
  double lambda0 = 1.0;
  std::vector<double> sigma;

  double numerator() const;
  double value(const std::vector<double>& lambdas) const;
  /// The online choice: each lambda_tau solves its balance equation given
  /// the past.
  std::vector<double> adaptive() const;
};

struct TuningReport {
  double adaptive_value = 0.0;
  double grid_min = 0.0;
  double ratio = 0.0;
  double step = 0.0;
  double lambda_max = 0.0;
  double slack = 0.0;              // step * t / grid_min
  bool truncation_certified = false;  // lambda_max > grid_min
};

/// Exhaustive minimum of B over lambda_s in {0, step, ..., lambda_max}^t,
/// computed exactly by dynamic programming over the cumulative sum. The step
/// is halved until the slack is at most 0.2.
TuningReport tuning_competitiveness(const TuningObjective& objective, double step = 0.02);

// ---------------------------------------------------------------- barriers

/// Numeric checks of barrier properties at random points: the
/// self-concordant barrier inequality, the Hessian shift bound inside the
/// Dikin ellipsoid, Dikin containment, the Minkowski bound, and the
/// normal-barrier identities and lower bound.
std::vector<PropertyCheck> barrier_property_suite(const Barrier& barrier, long trials, Rng& rng);

/// Runs the suite with nu declared ten times too small; the control passes
/// (failures == 0) when that broken barrier is caught.
PropertyCheck barrier_falsification_control(const Barrier& barrier, long trials, Rng& rng);

/// env_validate with every sigma_t misdeclared as 2 sigma_t + beta; passes
/// when the strong convexity check catches it.
PropertyCheck env_falsification_control(const EnvRealization& env, long samples, Rng& rng);

/// Everything `curvbco validate` reports for one experiment config.
std::vector<PropertyCheck> validate_experiment(const ExperimentConfig& config, long samples,
                                               long trials, std::uint64_t seed);

std::string checks_to_json(const std::vector<PropertyCheck>& checks);

}  // namespace curvbco
