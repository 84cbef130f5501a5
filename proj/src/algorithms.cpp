#include "curvbco/algorithms.hpp"

#include "curvbco/errors.hpp"

#include <algorithm>
#include <cmath>

namespace curvbco {

namespace {

// Bracket width for the lambda root; far below the 1e-9 residual budget even
// when sigma_{1:t} + lambda_{0:t} is of order 1e6.
constexpr double kLambdaTol = 1e-15;

double require(const std::optional<double>& v, const char* path) {
  if (!v) throw ConfigError("required for this mode", path);
  if (!(*v >= 0.0)) throw ConfigError("must be nonnegative", path);
  return *v;
}

}  // namespace

std::string to_string(Mode mode) {
  switch (mode) {
    case Mode::kSmooth:
      return "smooth";
    case Mode::kLipschitz:
      return "lipschitz";
    case Mode::kAogd:
      return "aogd";
    case Mode::kFixedCurvature:
      return "fixed_curvature";
  }
  return "?";
}

Mode parse_mode(const std::string& name) {
  if (name == "smooth") return Mode::kSmooth;
  if (name == "lipschitz") return Mode::kLipschitz;
  if (name == "aogd") return Mode::kAogd;
  if (name == "fixed_curvature") return Mode::kFixedCurvature;
  throw ConfigError("unknown mode '" + name + "'", "algorithm.mode");
}

DerivedConstants derive_constants(const AlgoConfig& c, double nu) {
  if (c.d < 1) throw ConfigError("dimension must be positive", "algorithm.d");
  if (c.T < 3) throw ConfigError("horizon must be at least 3", "algorithm.T");
  const ConstantOverrides& o = c.overrides;
  if (!(o.c_rho > 0.0)) throw ConfigError("must be positive", "algorithm.c_rho");
  if (!(o.c_lambda0 > 0.0)) throw ConfigError("must be positive", "algorithm.c_lambda0");
  if (!(o.c_eta > 0.0)) throw ConfigError("must be positive", "algorithm.c_eta");

  const double d = static_cast<double>(c.d);
  const double T = static_cast<double>(c.T);
  DerivedConstants out;
  switch (c.mode) {
    case Mode::kSmooth:
    case Mode::kFixedCurvature: {
      const double beta =
          c.mode == Mode::kSmooth ? require(c.beta, "algorithm.beta") : c.beta.value_or(0.0);
      const double root = 1.0 + 32.0 * std::sqrt(nu);
      out.rho = o.c_rho * 512.0 * nu * root * root;
      out.lambda0 = std::max((beta + 1.0) * out.rho / nu, o.c_lambda0 * d * d * (beta + 1.0));
      if (c.mode == Mode::kSmooth) {
        out.eta1 = o.c_eta / (2.0 * d) *
                   std::sqrt((beta + 1.0) / out.lambda0 + nu / (T * std::log(T)));
      } else {
        if (!(c.fixed_eta > 0.0)) throw ConfigError("must be positive", "algorithm.fixed_eta");
        if (!(c.fixed_sigma >= 0.0)) {
          throw ConfigError("must be nonnegative", "algorithm.fixed_sigma");
        }
        out.eta1 = c.fixed_eta;
      }
      break;
    }
    case Mode::kLipschitz: {
      const double L = require(c.L, "algorithm.L");
      const double inner = 16.0 * std::sqrt(nu) * std::cbrt(d) * std::cbrt(4.0 * L + 1.0) +
                           std::pow(L + 1.0, 2.0 / 3.0);
      out.rho = o.c_rho * 65536.0 * inner * inner * inner / d;
      out.lambda0 = std::max(out.rho, o.c_lambda0 * d * d * (L + 1.0) * (L + 1.0));
      out.eta1 = o.c_eta * std::pow(L + 1.0, 2.0 / 3.0) * std::pow(d, -4.0 / 3.0) *
                 std::cbrt(1.0 / out.lambda0 + 1.0 / T);
      break;
    }
    case Mode::kAogd:
      out.eta1 = 0.0;
      return out;
  }
  out.horizon_below_rho = T < out.rho;
  return out;
}

double tune_lambda_smooth(long d, double beta, double sigma_cum, double lambda_cum_prev) {
  const double target = static_cast<double>(d) * std::sqrt(beta + 1.0);
  const double base = sigma_cum + lambda_cum_prev;
  auto f = [&](double l) { return l * std::sqrt(base + l) - target; };
  if (!(f(1.0) > 0.0)) {
    throw ConfigError("no lambda_t in (0,1): lambda0 below d^2 (beta+1)", "algorithm.c_lambda0");
  }
  return bisect_root(f, 0.0, 1.0, kLambdaTol);
}

double tune_lambda_lipschitz(long d, double L, double sigma_cum, double lambda_cum_prev) {
  const double target = std::pow(static_cast<double>(d) * (L + 1.0), 2.0 / 3.0);
  const double base = sigma_cum + lambda_cum_prev;
  auto f = [&](double l) { return l * std::cbrt(base + l) - target; };
  if (!(f(1.0) > 0.0)) {
    throw ConfigError("no lambda_t in (0,1): lambda0 below d^2 (L+1)^2", "algorithm.c_lambda0");
  }
  return bisect_root(f, 0.0, 1.0, kLambdaTol);
}

double smooth_tuning_residual(long d, double beta, double sigma_cum, double lambda_cum,
                              double lambda) {
  return std::abs(lambda * std::sqrt(sigma_cum + lambda_cum) -
                  static_cast<double>(d) * std::sqrt(beta + 1.0));
}

double lipschitz_tuning_residual(long d, double L, double sigma_cum, double lambda_cum,
                                 double lambda) {
  return std::abs(lambda * std::cbrt(sigma_cum + lambda_cum) -
                  std::pow(static_cast<double>(d) * (L + 1.0), 2.0 / 3.0));
}

double eta_next(Mode mode, long d, double beta_or_L, double nu, long T, double sigma_cum,
                double lambda_cum, double c_eta) {
  if (T < 3) throw ConfigError("horizon must be at least 3", "algorithm.T");
  const double dd = static_cast<double>(d);
  const double TT = static_cast<double>(T);
  const double total = sigma_cum + lambda_cum;
  switch (mode) {
    case Mode::kSmooth:
      return c_eta / (2.0 * dd) * std::sqrt((beta_or_L + 1.0) / total + nu / (TT * std::log(TT)));
    case Mode::kLipschitz:
      return c_eta * std::pow(dd, -4.0 / 3.0) * std::pow(beta_or_L + 1.0, 2.0 / 3.0) *
             std::cbrt(1.0 / total + 1.0 / TT);
    default:
      throw ConfigError("eta_next: mode has no adaptive schedule", "algorithm.mode");
  }
}

double aogd_lambda(double sigma_cum, double lambda_cum_prev) {
  const double c = sigma_cum + lambda_cum_prev;
  // (-c + sqrt(c^2 + 8/3)) / 2 without cancellation.
  return (4.0 / 3.0) / (c + std::sqrt(c * c + 8.0 / 3.0));
}

OrthoSample sample_orthosphere_from_inv_sqrt(const SymMatrix& h_inv_sqrt, Rng& rng) {
  const Eigen::Index n = h_inv_sqrt.order();
  const Eigen::Index d = n - 1;
  Vector w = h_inv_sqrt.mat().col(d);
  w.normalize();
  Vector v = -w;
  v(d) += 1.0;  // e_{d+1} - w
  const double vn2 = v.squaredNorm();
  Matrix q = Matrix::Identity(n, n);
  if (vn2 > 1e-24) q -= (2.0 / vn2) * v * v.transpose();
  const Vector s = rng.unit_vector(d);
  Vector u = q.leftCols(d) * s;
  u.normalize();
  return {std::move(u), std::move(w)};
}

OrthoSample sample_orthosphere(const SymMatrix& h, Rng& rng) {
  return sample_orthosphere_from_inv_sqrt(mat_pow(h, -0.5), rng);
}

Vector grad_estimator(long d, double f_val, double lambda, const Vector& x,
                      const SymMatrix& h_sqrt, const Vector& u) {
  const double scale = static_cast<double>(d) * (f_val + 0.5 * lambda * x.squaredNorm());
  return scale * (h_sqrt * u);
}

BarrierLearner::BarrierLearner(AlgoConfig config, Barrier barrier)
    : config_(std::move(config)), nb_(std::move(barrier)), rng_(config_.seed) {
  if (config_.mode == Mode::kAogd) {
    throw ConfigError("BarrierLearner does not run aogd", "algorithm.mode");
  }
  if (config_.d != nb_.base().dim()) {
    throw ConfigError("dimension does not match the domain", "algorithm.d");
  }
  constants_ = derive_constants(config_, nb_.nu());
  state_ = FtrlState::initial(analytic_start(nb_), constants_.lambda0, constants_.eta1);
  eta_ = constants_.eta1;
  begin_round();
}

void BarrierLearner::begin_round() {
  const Eigen::Index d = nb_.base().dim();
  // sigma_{1:t-1} + lambda_{0:t-1}
  const double curvature = state_.sigma_sum + state_.lambda_sum;
  h_ = compute_H(nb_, state_.y_current, eta_, curvature);
  SqrtPair roots = sqrt_and_inv_sqrt(h_);
  h_sqrt_ = std::move(roots.sqrt);
  h_inv_sqrt_ = std::move(roots.inv_sqrt);
  OrthoSample s = sample_orthosphere_from_inv_sqrt(h_inv_sqrt_, rng_);
  u_ = std::move(s.u);
  w_ = std::move(s.w);
  x_hat_ = state_.y_current + h_inv_sqrt_ * u_;
  if (std::abs(x_hat_(d) - 1.0) > 1e-8) {
    throw InvariantViolation("play point left the slice b = 1 (last coordinate " +
                             std::to_string(x_hat_(d)) + ")");
  }
  x_hat_(d) = 1.0;
  const Membership m = nb_.base().domain().contains(x_hat_.head(d));
  if (!m.feasible) {
    throw InvariantViolation("play point outside the domain (slack " + std::to_string(m.slack) +
                             ")");
  }
}

Vector BarrierLearner::propose() const { return x_hat_.head(nb_.base().dim()); }

RoundInfo BarrierLearner::step(const Feedback& fb) {
  const long d = config_.d;
  const Vector x = propose();
  RoundInfo info;
  info.eta = eta_;

  double sigma = fb.sigma;
  double lambda = 0.0;
  LambdaRange range = LambdaRange::kOpenUnit;
  const double sigma_cum = state_.sigma_sum + (config_.mode == Mode::kFixedCurvature
                                                   ? config_.fixed_sigma
                                                   : fb.sigma);
  switch (config_.mode) {
    case Mode::kSmooth: {
      const double beta = *config_.beta;
      lambda = tune_lambda_smooth(d, beta, sigma_cum, state_.lambda_sum);
      info.tuning_residual =
          smooth_tuning_residual(d, beta, sigma_cum, state_.lambda_sum + lambda, lambda);
      break;
    }
    case Mode::kLipschitz: {
      const double L = *config_.L;
      lambda = tune_lambda_lipschitz(d, L, sigma_cum, state_.lambda_sum);
      info.tuning_residual =
          lipschitz_tuning_residual(d, L, sigma_cum, state_.lambda_sum + lambda, lambda);
      break;
    }
    case Mode::kFixedCurvature:
      sigma = config_.fixed_sigma;
      range = LambdaRange::kZeroAllowed;
      break;
    case Mode::kAogd:
      break;
  }
  info.lambda = lambda;

  const Vector g = grad_estimator(d, fb.f_val, lambda, x, h_sqrt_, u_);
  info.grad_dual_norm = (h_inv_sqrt_ * g).norm();

  const Vector y_t = state_.y_current;
  accumulate(state_, g, sigma, lambda, y_t, range);

  double next = config_.fixed_eta;
  if (config_.mode == Mode::kSmooth) {
    next = eta_next(Mode::kSmooth, d, *config_.beta, nb_.nu(), config_.T, state_.sigma_sum,
                    state_.lambda_sum, config_.overrides.c_eta);
  } else if (config_.mode == Mode::kLipschitz) {
    next = eta_next(Mode::kLipschitz, d, *config_.L, nb_.nu(), config_.T, state_.sigma_sum,
                    state_.lambda_sum, config_.overrides.c_eta);
  }
  if (next > eta_ * (1.0 + 1e-12)) {
    throw InvariantViolation("learning rate increased");
  }
  state_.eta_next = next;

  NewtonReport report;
  const Vector y_next = ftrl_solve(state_, nb_, NewtonOptions{}, &report);
  info.newton_iterations = report.iterations;
  info.stability_norm = std::sqrt(std::max(0.0, (y_t - y_next).dot(h_ * (y_t - y_next))));

  state_.y_current = y_next;
  eta_ = next;
  begin_round();
  return info;
}

AogdLearner::AogdLearner(AlgoConfig config, Domain domain)
    : config_(std::move(config)), domain_(std::move(domain)), x_(Vector::Zero(domain_.dim())) {
  if (config_.d != domain_.dim()) {
    throw ConfigError("dimension does not match the domain", "algorithm.d");
  }
  constants_ = derive_constants(config_, 1.0);
}

RoundInfo AogdLearner::step(const Feedback& fb) {
  if (!fb.gradient) {
    throw FeedbackOrderError("aogd requires gradient feedback");
  }
  RoundInfo info;
  sigma_sum_ += fb.sigma;
  const double lambda = aogd_lambda(sigma_sum_, lambda_sum_);
  lambda_sum_ += lambda;
  const double eta = 1.0 / (sigma_sum_ + lambda_sum_);
  info.lambda = lambda;
  info.eta = eta;
  info.tuning_residual = std::abs(1.5 * lambda - 1.0 / (sigma_sum_ + lambda_sum_));
  x_ = domain_.project(x_ - eta * (*fb.gradient + lambda * x_));
  return info;
}

std::unique_ptr<Learner> make_learner(const AlgoConfig& config, const Barrier& barrier) {
  if (config.mode == Mode::kAogd) {
    return std::make_unique<AogdLearner>(config, barrier.domain());
  }
  return std::make_unique<BarrierLearner>(config, barrier);
}

}  // namespace curvbco
