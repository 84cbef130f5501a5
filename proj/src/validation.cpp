#include "curvbco/validation.hpp"

#include "curvbco/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace curvbco {

UnbiasednessReport mc_unbiasedness(const Quadratic& f, double lambda, const Vector& y_lifted,
                                   const SymMatrix& h, long samples, Rng& rng) {
  const Eigen::Index d = y_lifted.size() - 1;
  const SqrtPair roots = sqrt_and_inv_sqrt(h);
  Vector sum = Vector::Zero(d);
  Vector sum_sq = Vector::Zero(d);
  for (long k = 0; k < samples; ++k) {
    const OrthoSample s = sample_orthosphere_from_inv_sqrt(roots.inv_sqrt, rng);
    const Vector x = (y_lifted + roots.inv_sqrt * s.u).head(d);
    const Vector g = grad_estimator(d, f.value(x), lambda, x, roots.sqrt, s.u).head(d);
    sum += g;
    sum_sq += g.cwiseProduct(g);
  }
  const double n = static_cast<double>(samples);
  UnbiasednessReport rep;
  rep.samples = samples;
  rep.mean = sum / n;
  const Vector var = ((sum_sq - n * rep.mean.cwiseProduct(rep.mean)) / (n - 1.0)).cwiseMax(0.0);
  rep.std_error = (var / n).cwiseSqrt();
  const Vector y = y_lifted.head(d);
  rep.oracle = f.gradient(y) + lambda * y;
  rep.pass = samples > 1;
  for (Eigen::Index i = 0; i < d; ++i) {
    rep.pass = rep.pass && std::abs(rep.mean(i) - rep.oracle(i)) <= 3.0 * rep.std_error(i);
  }
  return rep;
}

StabilityAudit stability_audit(const Trace& trace, double threshold) {
  StabilityAudit a;
  const AlgoConfig& c = trace.config.algorithm;
  a.rounds = static_cast<long>(trace.rounds.size());
  for (const RoundRecord& r : trace.rounds) {
    a.max_norm = std::max(a.max_norm, r.stability_norm);
    if (r.stability_norm > threshold) {
      ++a.violations;
      if (a.first_violations.size() < 100) a.first_violations.push_back(r.t);
    }
  }
  const bool adaptive = c.mode == Mode::kSmooth || c.mode == Mode::kLipschitz;
  a.asserted = adaptive && c.overrides.default_constants() &&
               static_cast<double>(c.T) >= trace.constants.rho;
  if (c.mode == Mode::kSmooth) {
    a.instantiation = "smooth: gamma = beta, p = 1/2";
  } else if (c.mode == Mode::kLipschitz) {
    a.instantiation = "lipschitz: gamma = 4L, p = 1/3";
  } else {
    a.instantiation = "not covered";
  }
  return a;
}

double TuningObjective::numerator() const {
  const double dd = static_cast<double>(d);
  return kind == TuningKind::kSmooth ? dd * std::sqrt(param + 1.0)
                                     : std::pow(dd * (param + 1.0), 2.0 / 3.0);
}

namespace {

double tuning_term(TuningKind kind, double k, double total) {
  return kind == TuningKind::kSmooth ? k / std::sqrt(total) : k / std::cbrt(total);
}

}  // namespace

double TuningObjective::value(const std::vector<double>& lambdas) const {
  if (lambdas.size() != sigma.size()) throw Error("TuningObjective: length mismatch");
  const double k = numerator();
  double sigma_cum = 0.0, lambda_cum = lambda0, v = 0.0;
  for (size_t s = 0; s < sigma.size(); ++s) {
    sigma_cum += sigma[s];
    lambda_cum += lambdas[s];
    v += lambdas[s] + tuning_term(kind, k, sigma_cum + lambda_cum);
  }
  return v;
}

std::vector<double> TuningObjective::adaptive() const {
  std::vector<double> out;
  double sigma_cum = 0.0, lambda_cum = lambda0;
  for (double s : sigma) {
    sigma_cum += s;
    const double l = kind == TuningKind::kSmooth
                         ? tune_lambda_smooth(d, param, sigma_cum, lambda_cum)
                         : tune_lambda_lipschitz(d, param, sigma_cum, lambda_cum);
    lambda_cum += l;
    out.push_back(l);
  }
  return out;
}

namespace {

// min over lambda in {0, step, ..., n step}^t of B. B depends on lambda only
// through the cumulative sums, so a DP over the cumulative grid index is
// exact.
double grid_minimum(const TuningObjective& obj, double step, long n) {
  const double k = obj.numerator();
  const long t = static_cast<long>(obj.sigma.size());
  const long width = t * n + 1;
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(static_cast<size_t>(width), inf), cur(static_cast<size_t>(width));
  prev[0] = 0.0;
  double sigma_cum = 0.0;
  for (long tau = 1; tau <= t; ++tau) {
    sigma_cum += obj.sigma[static_cast<size_t>(tau - 1)];
    for (long j = 0; j < width; ++j) {
      double best = inf;
      for (long i = std::max<long>(0, j - n); i <= j; ++i) {
        best = std::min(best, prev[static_cast<size_t>(i)] + static_cast<double>(j - i) * step);
      }
      cur[static_cast<size_t>(j)] =
          best + tuning_term(obj.kind, k, sigma_cum + obj.lambda0 + static_cast<double>(j) * step);
    }
    std::swap(prev, cur);
  }
  return *std::min_element(prev.begin(), prev.end());
}

}  // namespace

TuningReport tuning_competitiveness(const TuningObjective& obj, double step) {
  if (obj.sigma.empty()) throw ConfigError("empty sigma sequence", "sigma");
  if (!(step > 0.0)) throw ConfigError("must be positive", "step");
  TuningReport rep;
  rep.adaptive_value = obj.value(obj.adaptive());
  const double t = static_cast<double>(obj.sigma.size());
  const double root =
      obj.kind == TuningKind::kSmooth ? std::sqrt(obj.lambda0) : std::cbrt(obj.lambda0);
  rep.lambda_max = obj.numerator() * t / root + 1.0;
  for (int refine = 0;; ++refine) {
    const long n = static_cast<long>(std::ceil(rep.lambda_max / step));
    rep.step = step;
    rep.grid_min = grid_minimum(obj, step, n);
    rep.slack = step * t / rep.grid_min;
    if (rep.slack <= 0.2 || refine >= 6) break;
    step *= 0.5;
  }
  rep.ratio = rep.adaptive_value / rep.grid_min;
  rep.truncation_certified = rep.lambda_max > rep.grid_min;
  return rep;
}

namespace {

Vector interior_sample(const Domain& dom, Rng& rng) {
  for (;;) {
    Vector x = dom.sample(rng);
    if (dom.contains(x).strictly_interior) return x;
  }
}

void record(PropertyCheck& c, double violation) {
  ++c.trials;
  if (violation > 0.0 || !std::isfinite(violation)) {
    ++c.failures;
    c.worst_violation = std::max(c.worst_violation,
                                 std::isfinite(violation) ? violation
                                                          : std::numeric_limits<double>::max());
  }
}

}  // namespace

std::vector<PropertyCheck> barrier_property_suite(const Barrier& barrier, long trials, Rng& rng) {
  const Domain& dom = barrier.domain();
  const Eigen::Index d = dom.dim();
  const NormalBarrier nb(barrier);
  const double nu = barrier.nu();
  const double nu_bar = nb.nu_bar();
  PropertyCheck scb{"scb_inequality"}, shift{"hessian_shift_bound"}, dikin{"dikin_containment"},
      mink{"minkowski_bound"}, id1{"normal_hessian_times_z"}, id2{"normal_zHz_equals_nu_bar"},
      id3{"normal_lower_bound"}, id4{"normal_dual_gradient_norm"};

  for (long k = 0; k < trials; ++k) {
    const Vector x = interior_sample(dom, rng);
    const BarrierEval e = barrier.eval(x);
    const Vector h = rng.normal_vector(d);

    const double gh = e.gradient.dot(h);
    const double hHh = h.dot(e.hessian * h);
    record(scb, gh * gh - nu * hHh - 1e-8 * std::max(1.0, nu * hHh));

    const SymMatrix inv_sqrt = mat_pow(e.hessian, -0.5);
    const double r = rng.uniform(0.0, 0.999);
    const Vector x2 = x + r * (inv_sqrt * rng.unit_vector(d));
    const Membership m2 = dom.contains(x2);
    record(dikin, m2.strictly_interior ? 0.0 : -m2.slack + 1e-300);
    if (m2.strictly_interior) {
      const double lhs = std::sqrt(h.dot(barrier.hessian(x2) * h));
      const double rhs = std::sqrt(hHh) * (1.0 - r);
      record(shift, rhs - lhs - 1e-8 * std::sqrt(hHh));
    }

    const Vector y = interior_sample(dom, rng);
    const double pi = minkowski(dom, x, y);
    const double bound = pi < 1.0 ? nu_bar * std::log(1.0 / (1.0 - pi))
                                  : std::numeric_limits<double>::infinity();
    record(mink, nb.value(lift_point(y)) - nb.value(lift_point(x)) - bound - 1e-6);

    const double b1 = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
    const double b2 = std::exp(rng.uniform(std::log(0.5), std::log(2.0)));
    Vector z = lift_point(x) * b1;
    Vector w = lift_point(y) * b2;
    const BarrierEval ez = nb.eval(z);
    record(id1, (ez.hessian * z + ez.gradient).norm() - 1e-8 * ez.gradient.norm());
    record(id2, std::abs(z.dot(ez.hessian * z) - nu_bar) - 1e-8 * nu_bar);
    const Vector hinv_g = ez.hessian.mat().ldlt().solve(ez.gradient);
    record(id4, std::abs(ez.gradient.dot(hinv_g) - nu_bar) - 1e-8 * nu_bar);
    const double inner = -ez.gradient.dot(w);
    const double lower = inner > 0.0 ? ez.value - nu_bar * std::log(inner / nu_bar)
                                     : std::numeric_limits<double>::infinity();
    const double psi_w = nb.value(w);
    record(id3, lower - psi_w - 1e-8 * (1.0 + std::abs(psi_w)));
  }
  return {scb, shift, dikin, mink, id1, id2, id3, id4};
}

PropertyCheck barrier_falsification_control(const Barrier& barrier, long trials, Rng& rng) {
  const Barrier broken = barrier.with_declared_nu(barrier.nu() / 10.0);
  long caught = 0;
  for (const PropertyCheck& c : barrier_property_suite(broken, trials, rng)) caught += c.failures;
  PropertyCheck out{"control_barrier_nu_too_small_detected", 1, caught > 0 ? 0 : 1, 0.0};
  return out;
}

PropertyCheck env_falsification_control(const EnvRealization& env, long samples, Rng& rng) {
  // Zero-curvature rounds would stay zero under doubling alone, so they are
  // declared to curve as much as the sharpest round.
  EnvValidateOptions opts;
  opts.sigma_scale = 2.0;
  opts.sigma_shift = env.beta > 0.0 ? env.beta : 1.0;
  long caught = 0;
  for (const EnvCheck& c : env_validate(env, samples, rng, opts).checks) {
    if (c.property == "strong_convexity") caught += c.failures;
  }
  return PropertyCheck{"control_env_sigma_misdeclared_detected", 1, caught > 0 ? 0 : 1, 0.0};
}

std::vector<PropertyCheck> validate_experiment(const ExperimentConfig& config, long samples,
                                               long trials, std::uint64_t seed) {
  EnvSpec spec = config.environment;
  spec.T = config.algorithm.T;
  const EnvRealization env = make_env(spec, config.domain);
  Rng rng(seed);
  std::vector<PropertyCheck> out;
  for (EnvCheck c : env_validate(env, samples, rng).checks) {
    c.property = "env." + c.property;
    out.push_back(c);
  }
  const Barrier barrier = Barrier::for_domain(config.domain);
  for (PropertyCheck c : barrier_property_suite(barrier, trials, rng)) {
    c.property = "barrier." + c.property;
    out.push_back(c);
  }
  out.push_back(env_falsification_control(env, samples, rng));
  out.push_back(barrier_falsification_control(barrier, trials, rng));
  return out;
}

std::string checks_to_json(const std::vector<PropertyCheck>& checks) {
  nlohmann::json arr = nlohmann::json::array();
  for (const PropertyCheck& c : checks) {
    arr.push_back({{"property", c.property},
                   {"trials", c.trials},
                   {"failures", c.failures},
                   {"worst_violation", c.worst_violation}});
  }
  return arr.dump(2);
}

}  // namespace curvbco
