#include "curvbco/environments.hpp"

#include "curvbco/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace curvbco {

std::string to_string(Family f) { return f == Family::kQuadratic ? "quadratic" : "glm"; }

std::string to_string(ScheduleKind k) {
  switch (k) {
    case ScheduleKind::kConstant:
      return "constant";
    case ScheduleKind::kZero:
      return "zero";
    case ScheduleKind::kMixture:
      return "mixture";
    case ScheduleKind::kDecay:
      return "decay";
  }
  return "?";
}

std::string to_string(Placement p) {
  switch (p) {
    case Placement::kFirst:
      return "first";
    case Placement::kLast:
      return "last";
    case Placement::kRandom:
      return "random";
  }
  return "?";
}

Family parse_family(const std::string& s) {
  if (s == "quadratic") return Family::kQuadratic;
  if (s == "glm") return Family::kGlm;
  throw ConfigError("unknown family '" + s + "'", "environment.family");
}

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "constant") return ScheduleKind::kConstant;
  if (s == "zero") return ScheduleKind::kZero;
  if (s == "mixture") return ScheduleKind::kMixture;
  if (s == "decay") return ScheduleKind::kDecay;
  throw ConfigError("unknown schedule kind '" + s + "'", "environment.schedule.kind");
}

Placement parse_placement(const std::string& s) {
  if (s == "first") return Placement::kFirst;
  if (s == "last") return Placement::kLast;
  if (s == "random") return Placement::kRandom;
  throw ConfigError("unknown placement '" + s + "'", "environment.schedule.placement");
}

std::vector<double> sigma_schedule(const SigmaSchedule& s, long T, Rng& rng) {
  if (T < 1) throw ConfigError("horizon must be positive", "environment.T");
  if (!(s.sigma >= 0.0)) throw ConfigError("must be nonnegative", "environment.schedule.sigma");
  std::vector<double> out(static_cast<size_t>(T), s.sigma);
  switch (s.kind) {
    case ScheduleKind::kConstant:
      break;
    case ScheduleKind::kZero:
      std::fill(out.begin(), out.end(), 0.0);
      break;
    case ScheduleKind::kMixture: {
      if (s.M < 0 || s.M > T) {
        throw ConfigError("M must lie in [0, T]", "environment.schedule.M");
      }
      const auto m = static_cast<size_t>(s.M);
      if (s.placement == Placement::kFirst) {
        std::fill(out.begin(), out.begin() + static_cast<long>(m), 0.0);
      } else if (s.placement == Placement::kLast) {
        std::fill(out.end() - static_cast<long>(m), out.end(), 0.0);
      } else {
        // Partial Fisher-Yates over the round indices.
        std::vector<size_t> idx(out.size());
        std::iota(idx.begin(), idx.end(), size_t{0});
        for (size_t i = 0; i < m; ++i) {
          const size_t j = i + static_cast<size_t>(rng.uniform() * static_cast<double>(idx.size() - i));
          std::swap(idx[i], idx[std::min(j, idx.size() - 1)]);
          out[idx[i]] = 0.0;
        }
      }
      break;
    }
    case ScheduleKind::kDecay:
      if (!(s.alpha >= 0.0 && s.alpha <= 1.0)) {
        throw ConfigError("alpha must lie in [0, 1]", "environment.schedule.alpha");
      }
      for (long t = 1; t <= T; ++t) {
        out[static_cast<size_t>(t - 1)] = s.sigma * std::pow(static_cast<double>(t), -s.alpha);
      }
      break;
  }
  return out;
}

namespace {

double lambda_max(const Matrix& a) {
  if (a.isZero(0.0)) return 0.0;
  return sym_eig(SymMatrix(a, 1e-9)).values.maxCoeff();
}

}  // namespace

double abs_bound(const Quadratic& f, const Domain& domain) {
  const double r = domain.max_norm();
  return 0.5 * std::max(0.0, lambda_max(f.a)) * r * r + f.b.norm() * r + std::abs(f.c);
}

double gradient_bound(const Quadratic& f, const Domain& domain) {
  if (domain.kind() == DomainKind::kPolytope) {
    double best = 0.0;
    for (const Vector& v : domain.vertices()) best = std::max(best, f.gradient(v).norm());
    return best;
  }
  return std::max(0.0, lambda_max(f.a)) * domain.radius() + f.b.norm();
}

EnvRealization normalize_realization(const Domain& domain, std::vector<Quadratic> raw,
                                     const std::vector<double>& raw_sigma) {
  if (raw.size() != raw_sigma.size()) {
    throw Error("normalize_realization: losses and sigmas differ in length");
  }
  double bound = 0.0;
  for (const Quadratic& f : raw) bound = std::max(bound, abs_bound(f, domain));
  const double scale = bound > 0.0 ? 1.01 * bound : 1.0;

  EnvRealization env{domain, {}, {}, 0.0, 0.0, scale};
  env.losses.reserve(raw.size());
  env.sigma.reserve(raw.size());
  for (size_t t = 0; t < raw.size(); ++t) {
    Quadratic f = raw[t].scaled(1.0 / scale);
    env.beta = std::max(env.beta, lambda_max(f.a));
    env.lipschitz = std::max(env.lipschitz, gradient_bound(f, domain));
    env.sigma.push_back(raw_sigma[t] / scale);
    env.losses.push_back(std::move(f));
  }
  return env;
}

EnvRealization make_quadratic_env(const EnvSpec& spec, const Domain& domain) {
  Rng rng(spec.seed);
  return make_quadratic_env(spec, domain, rng);
}

EnvRealization make_quadratic_env(const EnvSpec& spec, const Domain& domain, Rng& rng) {
  if (!(spec.drift >= 0.0 && spec.drift <= 1.0)) {
    throw ConfigError("drift must lie in [0, 1]", "environment.drift");
  }
  const Eigen::Index d = domain.dim();
  Rng schedule_rng = rng.fork(1);
  const std::vector<double> sigma = sigma_schedule(spec.schedule, spec.T, schedule_rng);
  const Vector drift = spec.drift * rng.unit_vector(d);

  std::vector<Quadratic> raw;
  raw.reserve(sigma.size());
  for (double s : sigma) {
    const Vector center = domain.sample(rng);
    const Vector a = drift + rng.in_ball(d, 1.0 - spec.drift);
    const double offset = rng.uniform(-0.1, 0.1);
    raw.push_back(Quadratic{s * Matrix::Identity(d, d), a - s * center,
                            0.5 * s * center.squaredNorm() + offset});
  }
  return normalize_realization(domain, std::move(raw), sigma);
}

Quadratic glm_round(const Matrix& contexts, const Vector& responses) {
  const double n = static_cast<double>(contexts.cols());
  return Quadratic{(2.0 / n) * contexts * contexts.transpose(), (-2.0 / n) * contexts * responses,
                   responses.squaredNorm() / n};
}

double glm_sigma(const Matrix& contexts) {
  const double n = static_cast<double>(contexts.cols());
  const Matrix gram = contexts * contexts.transpose() / n;
  return std::max(0.0, 2.0 * sym_eig(SymMatrix(gram, 1e-9)).values(0));
}

EnvRealization make_glm_env(const EnvSpec& spec, const Domain& domain) {
  Rng rng(spec.seed);
  return make_glm_env(spec, domain, rng);
}

EnvRealization make_glm_env(const EnvSpec& spec, const Domain& domain, Rng& rng) {
  const Eigen::Index d = domain.dim();
  const long users = spec.users > 0 ? spec.users : static_cast<long>(d) + 1;
  Rng schedule_rng = rng.fork(1);
  const std::vector<double> sigma = sigma_schedule(spec.schedule, spec.T, schedule_rng);
  const Vector truth = 0.5 * domain.sample(rng);

  std::vector<Quadratic> raw;
  std::vector<double> raw_sigma;
  raw.reserve(sigma.size());
  raw_sigma.reserve(sigma.size());
  for (double s : sigma) {
    Matrix contexts(d, users);
    for (long i = 0; i < users; ++i) contexts.col(i) = rng.in_ball(d, 1.0);
    if (s > 0.0 && users >= d) {
      contexts *= std::sqrt(s);
    } else {
      // Singular Gram matrix: all contexts in a hyperplane.
      const Vector normal = rng.unit_vector(d);
      contexts -= normal * (normal.transpose() * contexts);
    }
    Vector responses = contexts.transpose() * truth;
    for (long i = 0; i < users; ++i) responses(i) += 0.1 * rng.normal();
    const bool singular = !(s > 0.0 && users >= d);
    raw_sigma.push_back(singular ? 0.0 : glm_sigma(contexts));
    raw.push_back(glm_round(contexts, responses));
  }
  return normalize_realization(domain, std::move(raw), raw_sigma);
}

EnvRealization make_env(const EnvSpec& spec, const Domain& domain) {
  return spec.family == Family::kQuadratic ? make_quadratic_env(spec, domain)
                                           : make_glm_env(spec, domain);
}

LossOracle::LossOracle(std::shared_ptr<const EnvRealization> env, bool gradient_feedback)
    : env_(std::move(env)), gradient_feedback_(gradient_feedback) {}

double LossOracle::evaluate(long t, const Vector& x) {
  if (t != round_ + 1 || t > horizon()) {
    throw FeedbackOrderError("evaluate: expected round " + std::to_string(round_ + 1) +
                             ", got " + std::to_string(t));
  }
  round_ = t;
  evaluated_ = true;
  revealed_ = false;
  return env_->losses[static_cast<size_t>(t - 1)].value(x);
}

double LossOracle::reveal(long t) {
  if (t != round_ || !evaluated_) {
    throw FeedbackOrderError("reveal: sigma_" + std::to_string(t) +
                             " requested before f_t was evaluated");
  }
  revealed_ = true;
  return env_->sigma[static_cast<size_t>(t - 1)];
}

Vector LossOracle::gradient(long t, const Vector& x) const {
  if (!gradient_feedback_) {
    throw FeedbackOrderError("gradient feedback is disabled for this oracle");
  }
  if (t != round_ || !evaluated_) {
    throw FeedbackOrderError("gradient: round " + std::to_string(t) + " not yet played");
  }
  return env_->losses[static_cast<size_t>(t - 1)].gradient(x);
}

bool EnvReport::ok() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const EnvCheck& c) { return c.failures == 0; });
}

EnvReport env_validate(const EnvRealization& env, long samples, Rng& rng,
                       const EnvValidateOptions& options) {
  EnvCheck smooth{"smoothness"}, lipschitz{"lipschitz"}, strong{"strong_convexity"},
      sigma_bound{"sigma_le_4L_over_D"}, bounded{"abs_f_le_1"};
  auto record = [](EnvCheck& c, double violation) {
    ++c.trials;
    if (violation > 0.0) {
      ++c.failures;
      c.worst_violation = std::max(c.worst_violation, violation);
    }
  };
  const long T = env.horizon();
  const double diameter = env.domain.diameter();
  for (long k = 0; k < samples && T > 0; ++k) {
    const long t = std::min<long>(T - 1, static_cast<long>(rng.uniform() * static_cast<double>(T)));
    const Quadratic& f = env.losses[static_cast<size_t>(t)];
    const double sigma =
        options.sigma_scale * env.sigma[static_cast<size_t>(t)] + options.sigma_shift;
    const Vector x = env.domain.sample(rng);
    const Vector y = env.domain.sample(rng);
    const double dist = (x - y).norm();
    const double fx = f.value(x);
    const double fy = f.value(y);
    const Vector gx = f.gradient(x);

    record(smooth, (gx - f.gradient(y)).norm() - env.beta * dist * (1.0 + 1e-6) - 1e-12);
    if (options.check_lipschitz) {
      const double lip = options.lipschitz_scale * env.lipschitz;
      record(lipschitz, std::abs(fx - fy) - lip * dist * (1.0 + 1e-6) - 1e-12);
      record(sigma_bound, sigma - 4.0 * env.lipschitz / diameter - 1e-12);
    }
    record(strong, (fx + gx.dot(y - x) + 0.5 * sigma * dist * dist) - fy - 1e-9);
    record(bounded, std::max(std::abs(fx), std::abs(fy)) - 1.0);
  }
  EnvReport report;
  report.checks = {smooth, strong, bounded};
  if (options.check_lipschitz) {
    report.checks.push_back(lipschitz);
    report.checks.push_back(sigma_bound);
  }
  return report;
}

}  // namespace curvbco
