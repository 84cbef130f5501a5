#pragma once

#include "curvbco/barrier.hpp"
#include "curvbco/ftrl.hpp"
#include "curvbco/numerics.hpp"
#include "curvbco/rng.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace curvbco {

enum class Mode { kSmooth, kLipschitz, kAogd, kFixedCurvature };

std::string to_string(Mode mode);
Mode parse_mode(const std::string& name);

/// Multipliers on rho, lambda0 and eta. All ones reproduces the constants of
/// the algorithm boxes exactly.
struct ConstantOverrides {
  double c_rho = 1.0;
  double c_lambda0 = 1.0;
  double c_eta = 1.0;

  bool default_constants() const { return c_rho == 1.0 && c_lambda0 == 1.0 && c_eta == 1.0; }
  bool operator==(const ConstantOverrides&) const = default;
};

struct AlgoConfig {
  Mode mode = Mode::kSmooth;
  long d = 0;
  long T = 0;
  std::optional<double> beta;  // smoothness (smooth mode)
  std::optional<double> L;     // Lipschitz constant (lipschitz mode)
  ConstantOverrides overrides;
  std::uint64_t seed = 0;
  double fixed_sigma = 0.0;  // fixed_curvature mode only
  double fixed_eta = 0.0;    // fixed_curvature mode only

  bool operator==(const AlgoConfig&) const = default;
};

struct DerivedConstants {
  double rho = 0.0;  // rho (smooth) or rho' (lipschitz), after c_rho
  double lambda0 = 0.0;
  double eta1 = 0.0;
  bool horizon_below_rho = false;
};

/// smooth:    rho = 512 nu (1 + 32 sqrt(nu))^2,
///            lambda0 = max{(beta+1) rho / nu, d^2 (beta+1)},
///            eta1 = sqrt((beta+1)/lambda0 + nu/(T ln T)) / (2d)
/// lipschitz: rho' = 2^16 (16 sqrt(nu) d^{1/3} (4L+1)^{1/3} + (L+1)^{2/3})^3 / d,
///            lambda0 = max{rho', d^2 (L+1)^2},
///            eta1 = (L+1)^{2/3} d^{-4/3} (1/lambda0 + 1/T)^{1/3}
/// c_rho scales rho, c_lambda0 scales the d^2 floor of lambda0, c_eta scales
/// every learning rate. fixed_curvature keeps the smooth lambda0 (beta
/// defaults to 0) and uses fixed_eta.
DerivedConstants derive_constants(const AlgoConfig& config, double nu);

/// Root in (0,1) of lambda = d sqrt(beta+1) / sqrt(sigma_cum + lambda_cum_prev + lambda).
/// Throws ConfigError when no root lies in (0,1) (lambda0 too small).
double tune_lambda_smooth(long d, double beta, double sigma_cum, double lambda_cum_prev);
/// Root in (0,1) of lambda = (d (L+1))^{2/3} / (sigma_cum + lambda_cum_prev + lambda)^{1/3}.
double tune_lambda_lipschitz(long d, double L, double sigma_cum, double lambda_cum_prev);

/// |lambda sqrt(sigma_cum + lambda_cum) - d sqrt(beta+1)|, lambda_cum including lambda.
double smooth_tuning_residual(long d, double beta, double sigma_cum, double lambda_cum,
                              double lambda);
/// |lambda (sigma_cum + lambda_cum)^{1/3} - (d (L+1))^{2/3}|.
double lipschitz_tuning_residual(long d, double L, double sigma_cum, double lambda_cum,
                                 double lambda);

/// eta_{t+1} for the smooth or lipschitz schedule, times c_eta. Requires T >= 3.
double eta_next(Mode mode, long d, double beta_or_L, double nu, long T, double sigma_cum,
                double lambda_cum, double c_eta = 1.0);

/// Positive root of 1.5 l^2 + 1.5 l (sigma_cum + lambda_cum_prev) - 1 = 0.
double aogd_lambda(double sigma_cum, double lambda_cum_prev);

struct OrthoSample {
  Vector u;  // unit, orthogonal to w
  Vector w;  // H^{-1/2} e_{d+1}, normalized
};

/// Uniform draw from the unit sphere of R^{d+1} intersected with
/// (H^{-1/2} e_{d+1})^perp. The orthogonal complement is spanned by the
/// first d columns of the Householder reflection taking e_{d+1} to w.
OrthoSample sample_orthosphere(const SymMatrix& h, Rng& rng);
OrthoSample sample_orthosphere_from_inv_sqrt(const SymMatrix& h_inv_sqrt, Rng& rng);

/// g = d (f + lambda/2 |x|^2) H^{1/2} u.
Vector grad_estimator(long d, double f_val, double lambda, const Vector& x,
                      const SymMatrix& h_sqrt, const Vector& u);

struct Feedback {
  double f_val = 0.0;
  double sigma = 0.0;
  std::optional<Vector> gradient;  // AOGD only
};

struct RoundInfo {
  double lambda = 0.0;
  double eta = 0.0;             // eta_t used this round
  double stability_norm = 0.0;  // |y_t - y_{t+1}|_{H_t}
  double grad_dual_norm = 0.0;  // |g_t|*_{H_t}
  double tuning_residual = 0.0;
  int newton_iterations = 0;
};

/// Common driver interface: propose() is pure, step() consumes feedback for
/// the proposed point and advances one round.
class Learner {
 public:
  virtual ~Learner() = default;
  virtual Vector propose() const = 0;
  virtual RoundInfo step(const Feedback& feedback) = 0;
  virtual bool needs_gradient() const { return false; }
  virtual const DerivedConstants& constants() const = 0;
};

/// Lifted-FTRL learner: the smooth and lipschitz adaptive algorithms and the
/// fixed-curvature baseline (lambda_t = 0, sigma_t := fixed_sigma,
/// eta := fixed_eta, lambda0 kept as lifting regularizer).
class BarrierLearner final : public Learner {
 public:
  BarrierLearner(AlgoConfig config, Barrier barrier);

  Vector propose() const override;
  RoundInfo step(const Feedback& feedback) override;
  const DerivedConstants& constants() const override { return constants_; }

  const AlgoConfig& config() const { return config_; }
  const NormalBarrier& normal_barrier() const { return nb_; }
  const FtrlState& state() const { return state_; }
  double eta() const { return eta_; }
  const SymMatrix& H() const { return h_; }
  const SymMatrix& H_sqrt() const { return h_sqrt_; }
  const SymMatrix& H_inv_sqrt() const { return h_inv_sqrt_; }
  const Vector& u() const { return u_; }
  const Vector& w() const { return w_; }
  /// Lifted play point y_t + H_t^{-1/2} u_t.
  const Vector& x_hat() const { return x_hat_; }

 private:
  void begin_round();

  AlgoConfig config_;
  NormalBarrier nb_;
  DerivedConstants constants_;
  FtrlState state_;
  double eta_ = 0.0;
  SymMatrix h_, h_sqrt_, h_inv_sqrt_;
  Vector u_, w_, x_hat_;
  Rng rng_;
};

/// Adaptive online gradient descent with full-gradient feedback:
/// x_{t+1} = Proj(x_t - (grad f_t(x_t) + lambda_t x_t) / (sigma_{1:t} + lambda_{1:t})).
class AogdLearner final : public Learner {
 public:
  AogdLearner(AlgoConfig config, Domain domain);

  Vector propose() const override { return x_; }
  RoundInfo step(const Feedback& feedback) override;
  bool needs_gradient() const override { return true; }
  const DerivedConstants& constants() const override { return constants_; }

  double sigma_sum() const { return sigma_sum_; }
  double lambda_sum() const { return lambda_sum_; }

 private:
  AlgoConfig config_;
  Domain domain_;
  DerivedConstants constants_;
  Vector x_;
  double sigma_sum_ = 0.0;
  double lambda_sum_ = 0.0;
};

/// Validates the config for its mode and builds the learner.
std::unique_ptr<Learner> make_learner(const AlgoConfig& config, const Barrier& barrier);

}  // namespace curvbco
