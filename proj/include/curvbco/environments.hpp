#pragma once

#include "curvbco/barrier.hpp"
#include "curvbco/numerics.hpp"
#include "curvbco/rng.hpp"

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace curvbco {

/// f(x) = 1/2 x^T A x + b^T x + c.
struct Quadratic {
  Matrix a;
  Vector b;
  double c = 0.0;

  double value(const Vector& x) const { return 0.5 * x.dot(a * x) + b.dot(x) + c; }
  Vector gradient(const Vector& x) const { return a * x + b; }
  Quadratic scaled(double s) const { return {s * a, s * b, s * c}; }
};

enum class Family { kQuadratic, kGlm };
enum class ScheduleKind { kConstant, kZero, kMixture, kDecay };
enum class Placement { kFirst, kLast, kRandom };

std::string to_string(Family f);
std::string to_string(ScheduleKind k);
std::string to_string(Placement p);
Family parse_family(const std::string& s);
ScheduleKind parse_schedule_kind(const std::string& s);
Placement parse_placement(const std::string& s);

struct SigmaSchedule {
  ScheduleKind kind = ScheduleKind::kConstant;
  double sigma = 1.0;  // raw curvature of the strongly convex rounds
  long M = 0;          // mixture: number of zero-curvature rounds
  Placement placement = Placement::kLast;
  double alpha = 0.0;  // decay: sigma_t = sigma * t^{-alpha}

  bool operator==(const SigmaSchedule&) const = default;
};

struct EnvSpec {
  Family family = Family::kQuadratic;
  long T = 0;
  SigmaSchedule schedule;
  long users = 0;      // glm: contexts per round (0 means d + 1)
  double drift = 0.5;  // norm of the persistent part of the linear term
  std::uint64_t seed = 0;

  bool operator==(const EnvSpec&) const = default;
};

/// Raw per-round curvature sequence. Mixture placement first puts the M
/// zero rounds at the start, last at the end, random on a uniform subset.
std::vector<double> sigma_schedule(const SigmaSchedule& schedule, long T, Rng& rng);

/// A fully realized, normalized loss sequence with its reported constants.
/// This is the adversary's private view; learners only see it through a
/// LossOracle.
struct EnvRealization {
  Domain domain;
  std::vector<Quadratic> losses;  // normalized, |f_t| <= 1 on the domain
  std::vector<double> sigma;      // reported sigma_t, post-normalization
  double beta = 0.0;              // max_t lambda_max(A_t)
  double lipschitz = 0.0;         // max_t sup_X |A_t x + b_t|
  double scale = 1.0;             // B: raw losses were divided by B

  long horizon() const { return static_cast<long>(losses.size()); }
};

/// Divides every raw loss by B = 1.01 max_t sup_X |f_t| and reports the
/// post-scaling curvature constants. sup_X |f_t| is bounded analytically by
/// lambda_max(A)/2 R^2 + |b| R + |c| with R = max_X |x| (exact for isotropic A
/// on a ball).
EnvRealization normalize_realization(const Domain& domain, std::vector<Quadratic> raw,
                                     const std::vector<double>& raw_sigma);

/// Upper bound of sup_{x in X} |f(x)| used for normalization.
double abs_bound(const Quadratic& f, const Domain& domain);
/// Upper bound of sup_{x in X} |grad f(x)| (exact on a ball for isotropic A,
/// exact over polytope vertices).
double gradient_bound(const Quadratic& f, const Domain& domain);

/// Raw f_t(x) = sigma_t/2 |x - c_t|^2 + a_t^T x + e_t, with c_t uniform in X,
/// a_t = m + xi_t (m a fixed vector of norm drift, xi_t uniform in the ball of
/// radius 1 - drift) and e_t uniform in [-0.1, 0.1].
EnvRealization make_quadratic_env(const EnvSpec& spec, const Domain& domain);
EnvRealization make_quadratic_env(const EnvSpec& spec, const Domain& domain, Rng& rng);

/// Squared-loss GLM round: f(x) = (1/N) sum_i (c_i^T x - r_i)^2 with the
/// contexts as the columns of `contexts`.
Quadratic glm_round(const Matrix& contexts, const Vector& responses);
/// 2 lambda_min((1/N) sum_i c_i c_i^T), the curvature of glm_round.
double glm_sigma(const Matrix& contexts);

/// Rounds with positive scheduled curvature draw N >= d contexts scaled by
/// sqrt(sigma_t); zero-curvature rounds draw contexts inside a random
/// hyperplane, so the Gram matrix is singular. Responses follow a fixed
/// x* in X plus noise.
EnvRealization make_glm_env(const EnvSpec& spec, const Domain& domain);
EnvRealization make_glm_env(const EnvSpec& spec, const Domain& domain, Rng& rng);

EnvRealization make_env(const EnvSpec& spec, const Domain& domain);

/// Online view of a realization. Round t (1-based) must be evaluated before
/// its sigma_t is revealed, and rounds proceed in order.
class LossOracle {
 public:
  explicit LossOracle(std::shared_ptr<const EnvRealization> env, bool gradient_feedback = false);

  long horizon() const { return env_->horizon(); }
  long current_round() const { return round_; }

  /// f_t(x). Advances to round t; t must be the next round.
  double evaluate(long t, const Vector& x);
  /// sigma_t; only after evaluate(t, .).
  double reveal(long t);
  /// grad f_t at the point evaluated this round; requires gradient feedback.
  Vector gradient(long t, const Vector& x) const;

  const EnvRealization& realization() const { return *env_; }

 private:
  std::shared_ptr<const EnvRealization> env_;
  bool gradient_feedback_;
  long round_ = 0;
  bool evaluated_ = false;
  bool revealed_ = true;
};

struct EnvCheck {
  std::string property;
  long trials = 0;
  long failures = 0;
  double worst_violation = 0.0;
};

struct EnvReport {
  std::vector<EnvCheck> checks;
  bool ok() const;
};

struct EnvValidateOptions {
  /// Multiplies the declared sigma_t (falsification control).
  double sigma_scale = 1.0;
  /// Added to the declared sigma_t after scaling (falsification control).
  double sigma_shift = 0.0;
  /// Multiplies the declared L in the Lipschitz check (falsification control).
  double lipschitz_scale = 1.0;
  bool check_lipschitz = true;
};

/// Samples random rounds and point pairs and checks, against the declared
/// constants: smoothness, Lipschitz bound, strong convexity, sigma_t <= 4L/D
/// and |f_t| <= 1. Never throws on a failed property.
EnvReport env_validate(const EnvRealization& env, long samples, Rng& rng,
                       const EnvValidateOptions& options = {});

}  // namespace curvbco
