#include "curvbco/harness.hpp"

#include "curvbco/errors.hpp"
#include "curvbco/ftrl.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace curvbco {

using nlohmann::json;

// ---------------------------------------------------------------- config I/O

namespace {

void reject_unknown(const json& obj, const std::string& path,
                    std::initializer_list<const char*> known) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("unknown key", path + "." + it.key());
  }
}

const json& need(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ConfigError("missing required key", path + "." + key);
  return *it;
}

const json& need_object(const json& obj, const char* key, const std::string& path) {
  const json& v = need(obj, key, path);
  if (!v.is_object()) throw ConfigError("expected an object", path + "." + key);
  return v;
}

double as_number(const json& v, const std::string& path) {
  if (!v.is_number()) throw ConfigError("expected a number", path);
  return v.get<double>();
}

long as_integer(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ConfigError("expected an integer", path);
  return v.get<long>();
}

std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ConfigError("expected a string", path);
  return v.get<std::string>();
}

double number_or(const json& obj, const char* key, const std::string& path, double fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_number(*it, path + "." + key);
}

long integer_or(const json& obj, const char* key, const std::string& path, long fallback) {
  auto it = obj.find(key);
  return it == obj.end() ? fallback : as_integer(*it, path + "." + key);
}

std::optional<double> optional_number(const json& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  return as_number(*it, path + "." + key);
}

Domain parse_domain(const json& j) {
  const std::string path = "domain";
  reject_unknown(j, path, {"kind", "radius", "dim", "A", "b"});
  const std::string kind = as_string(need(j, "kind", path), path + ".kind");
  try {
    if (kind == "ball") {
      const long dim = as_integer(need(j, "dim", path), path + ".dim");
      const double r = as_number(need(j, "radius", path), path + ".radius");
      return Domain::ball(dim, r);
    }
    if (kind == "polytope") {
      const json& ja = need(j, "A", path);
      const json& jb = need(j, "b", path);
      if (!ja.is_array() || ja.empty()) throw ConfigError("expected a nonempty array", path + ".A");
      if (!jb.is_array() || jb.size() != ja.size()) {
        throw ConfigError("expected an array with one entry per row of A", path + ".b");
      }
      const auto m = static_cast<Eigen::Index>(ja.size());
      if (!ja[0].is_array() || ja[0].empty()) throw ConfigError("expected rows", path + ".A[0]");
      const auto d = static_cast<Eigen::Index>(ja[0].size());
      Matrix a(m, d);
      Vector b(m);
      for (Eigen::Index i = 0; i < m; ++i) {
        const std::string row = path + ".A[" + std::to_string(i) + "]";
        const json& r = ja[static_cast<size_t>(i)];
        if (!r.is_array() || static_cast<Eigen::Index>(r.size()) != d) {
          throw ConfigError("row length differs from row 0", row);
        }
        for (Eigen::Index k = 0; k < d; ++k) {
          a(i, k) = as_number(r[static_cast<size_t>(k)], row + "[" + std::to_string(k) + "]");
        }
        b(i) = as_number(jb[static_cast<size_t>(i)], path + ".b[" + std::to_string(i) + "]");
      }
      return Domain::polytope(a, b);
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what(), path);
  }
  throw ConfigError("unknown kind '" + kind + "'", path + ".kind");
}

json domain_to_json(const Domain& d) {
  if (d.kind() == DomainKind::kBall) {
    return {{"kind", "ball"}, {"dim", d.dim()}, {"radius", d.radius()}};
  }
  json a = json::array();
  for (Eigen::Index i = 0; i < d.a().rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < d.a().cols(); ++k) row.push_back(d.a()(i, k));
    a.push_back(row);
  }
  json b = json::array();
  for (Eigen::Index i = 0; i < d.b().size(); ++i) b.push_back(d.b()(i));
  return {{"kind", "polytope"}, {"A", a}, {"b", b}};
}

}  // namespace

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  const bool same_domain = domain.kind() == o.domain.kind() && domain.dim() == o.domain.dim() &&
                           (domain.kind() == DomainKind::kBall
                                ? domain.radius() == o.domain.radius()
                                : (domain.a() == o.domain.a() && domain.b() == o.domain.b()));
  return same_domain && algorithm == o.algorithm && environment == o.environment;
}

ExperimentConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("malformed JSON: ") + e.what(), "$");
  }
  if (!root.is_object()) throw ConfigError("expected an object", "$");
  reject_unknown(root, "$", {"domain", "algorithm", "environment"});

  ExperimentConfig cfg;
  cfg.domain = parse_domain(need_object(root, "domain", "$"));

  const json& ja = need_object(root, "algorithm", "$");
  const std::string pa = "algorithm";
  reject_unknown(ja, pa,
                 {"mode", "T", "beta", "L", "c_rho", "c_lambda0", "c_eta", "seed", "fixed_sigma",
                  "fixed_eta"});
  AlgoConfig& a = cfg.algorithm;
  a.mode = parse_mode(as_string(need(ja, "mode", pa), pa + ".mode"));
  a.d = cfg.domain.dim();
  a.T = as_integer(need(ja, "T", pa), pa + ".T");
  if (a.T < 3) throw ConfigError("horizon must be at least 3", pa + ".T");
  a.beta = optional_number(ja, "beta", pa);
  a.L = optional_number(ja, "L", pa);
  a.overrides.c_rho = number_or(ja, "c_rho", pa, 1.0);
  a.overrides.c_lambda0 = number_or(ja, "c_lambda0", pa, 1.0);
  a.overrides.c_eta = number_or(ja, "c_eta", pa, 1.0);
  if (auto it = ja.find("seed"); it != ja.end()) {
    if (!it->is_number_unsigned() && !it->is_number_integer()) {
      throw ConfigError("expected a nonnegative integer", pa + ".seed");
    }
    a.seed = it->get<std::uint64_t>();
  }
  a.fixed_sigma = number_or(ja, "fixed_sigma", pa, 0.0);
  a.fixed_eta = number_or(ja, "fixed_eta", pa, 0.0);

  const json& je = need_object(root, "environment", "$");
  const std::string pe = "environment";
  reject_unknown(je, pe, {"family", "schedule", "users", "drift", "seed"});
  EnvSpec& e = cfg.environment;
  if (auto it = je.find("family"); it != je.end()) {
    e.family = parse_family(as_string(*it, pe + ".family"));
  }
  e.T = a.T;
  if (auto it = je.find("schedule"); it != je.end()) {
    const std::string ps = pe + ".schedule";
    if (!it->is_object()) throw ConfigError("expected an object", ps);
    reject_unknown(*it, ps, {"kind", "sigma", "M", "placement", "alpha"});
    SigmaSchedule& s = e.schedule;
    s.kind = parse_schedule_kind(as_string(need(*it, "kind", ps), ps + ".kind"));
    s.sigma = number_or(*it, "sigma", ps, 1.0);
    s.M = integer_or(*it, "M", ps, 0);
    if (auto p = it->find("placement"); p != it->end()) {
      s.placement = parse_placement(as_string(*p, ps + ".placement"));
    }
    s.alpha = number_or(*it, "alpha", ps, 0.0);
  }
  e.users = integer_or(je, "users", pe, 0);
  e.drift = number_or(je, "drift", pe, 0.5);
  if (auto it = je.find("seed"); it != je.end()) {
    if (!it->is_number_unsigned() && !it->is_number_integer()) {
      throw ConfigError("expected a nonnegative integer", pe + ".seed");
    }
    e.seed = it->get<std::uint64_t>();
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string(), "$");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const AlgoConfig& a = cfg.algorithm;
  json ja = {{"mode", to_string(a.mode)},
             {"T", a.T},
             {"c_rho", a.overrides.c_rho},
             {"c_lambda0", a.overrides.c_lambda0},
             {"c_eta", a.overrides.c_eta},
             {"seed", a.seed},
             {"fixed_sigma", a.fixed_sigma},
             {"fixed_eta", a.fixed_eta}};
  if (a.beta) ja["beta"] = *a.beta;
  if (a.L) ja["L"] = *a.L;
  const EnvSpec& e = cfg.environment;
  json je = {{"family", to_string(e.family)},
             {"schedule",
              {{"kind", to_string(e.schedule.kind)},
               {"sigma", e.schedule.sigma},
               {"M", e.schedule.M},
               {"placement", to_string(e.schedule.placement)},
               {"alpha", e.schedule.alpha}}},
             {"users", e.users},
             {"drift", e.drift},
             {"seed", e.seed}};
  json root = {{"domain", domain_to_json(cfg.domain)}, {"algorithm", ja}, {"environment", je}};
  return root.dump(2);
}

void save_config(const ExperimentConfig& config, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << config_to_json(config) << "\n";
}

// ---------------------------------------------------------------- comparator

QuadraticAccumulator::QuadraticAccumulator(Eigen::Index dim)
    : sum_{Matrix::Zero(dim, dim), Vector::Zero(dim), 0.0} {}

void QuadraticAccumulator::add(const Quadratic& f) {
  sum_.a += f.a;
  sum_.b += f.b;
  sum_.c += f.c;
}

namespace {

Vector minimize_on_ball(const Quadratic& f, double r) {
  const Eigen::Index d = f.b.size();
  const EigenDecomposition eig = sym_eig(SymMatrix(f.a, 1e-9));
  const Vector lam = eig.values.cwiseMax(0.0);
  const Vector coef = eig.vectors.transpose() * f.b;
  const double tiny = 1e-12 * std::max(1.0, lam.maxCoeff());
  const double b_norm = f.b.norm();

  // Unconstrained minimizer (minimum-norm one when A is singular).
  bool bounded = true;
  Vector c0(d);
  for (Eigen::Index i = 0; i < d; ++i) {
    if (lam(i) > tiny) {
      c0(i) = -coef(i) / lam(i);
    } else {
      c0(i) = 0.0;
      if (std::abs(coef(i)) > 1e-12 * std::max(1.0, b_norm)) bounded = false;
    }
  }
  if (bounded && c0.norm() <= r) return eig.vectors * c0;

  // Boundary solution: |(A + mu I)^{-1} b| = r with mu > 0; the norm is
  // decreasing in mu and at most r at mu = |b|/r.
  auto point = [&](double mu) {
    Vector c(d);
    for (Eigen::Index i = 0; i < d; ++i) c(i) = -coef(i) / (lam(i) + mu);
    return c;
  };
  double lo = 0.0;
  double hi = b_norm / r;
  for (int it = 0; it < 2000; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (!(mid > lo && mid < hi)) break;
    if (point(mid).norm() > r) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  Vector x = eig.vectors * point(hi);
  const double n = x.norm();
  if (n > r) x *= r / n;
  return x;
}

// Minimize F over the face {a_i^T x = b_i, i in active} starting from x0.
std::optional<Vector> polish_on_face(const Quadratic& f, const Domain& dom, const Vector& x0,
                                     const std::vector<Eigen::Index>& active) {
  const Eigen::Index d = x0.size();
  Matrix n_basis;
  Vector base = x0;
  if (active.empty()) {
    n_basis = Matrix::Identity(d, d);
  } else {
    Matrix as(static_cast<Eigen::Index>(active.size()), d);
    Vector bs(as.rows());
    for (size_t k = 0; k < active.size(); ++k) {
      as.row(static_cast<Eigen::Index>(k)) = dom.a().row(active[k]);
      bs(static_cast<Eigen::Index>(k)) = dom.b()(active[k]);
    }
    Eigen::JacobiSVD<Matrix> svd(as, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vector& sv = svd.singularValues();
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) rank += sv(i) > 1e-10 * sv(0) ? 1 : 0;
    // Snap the base point onto the face.
    base = x0 - svd.solve(Vector(as * x0 - bs));
    n_basis = svd.matrixV().rightCols(d - rank);
  }
  if (n_basis.cols() > 0) {
    const Matrix reduced = n_basis.transpose() * f.a * n_basis;
    const Vector rhs = -(n_basis.transpose() * f.gradient(base));
    Eigen::LDLT<Matrix> ldlt(reduced);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return std::nullopt;
    const Vector z = ldlt.solve(rhs);
    if (!(reduced * z - rhs).isZero(1e-9 * (1.0 + rhs.norm()))) return std::nullopt;
    base += n_basis * z;
  }
  const Vector slack = dom.b() - dom.a() * base;
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    if (slack(i) < -1e-12 * (1.0 + std::abs(dom.b()(i)))) return std::nullopt;
  }
  return base;
}

Vector minimize_on_polytope(const Quadratic& f, const Domain& dom) {
  const Barrier barrier = Barrier::for_domain(dom);
  const double m = static_cast<double>(dom.a().rows());
  const double scale =
      std::max(1.0, f.b.norm() * dom.max_norm() + f.a.norm() * dom.max_norm() * dom.max_norm());
  Vector x = Vector::Zero(dom.dim());
  double t = 1.0;
  for (;;) {
    const double w = t / scale;
    NewtonProblem p{
        [&](const Vector& y) { return w * f.value(y) + barrier.value(y); },
        [&](const Vector& y) { return Vector(w * f.gradient(y) + barrier.gradient(y)); },
        [&](const Vector& y) { return barrier.hessian(y) + SymMatrix(Matrix(w * f.a), 1e-9); }};
    x = damped_newton(p, x, NewtonOptions{});
    if (m / t <= 1e-9) break;
    t *= 10.0;
  }
  // The central path stops short of the boundary; finish on the face that it
  // approaches.
  std::vector<Eigen::Index> active;
  const Vector slack = dom.b() - dom.a() * x;
  for (Eigen::Index i = 0; i < slack.size(); ++i) {
    if (slack(i) < 1e-6 * (1.0 + std::abs(dom.b()(i)))) active.push_back(i);
  }
  if (auto polished = polish_on_face(f, dom, x, active)) {
    if (f.value(*polished) <= f.value(x)) return *polished;
  }
  return x;
}

}  // namespace

Vector minimize_quadratic(const Quadratic& total, const Domain& domain) {
  return domain.kind() == DomainKind::kBall ? minimize_on_ball(total, domain.radius())
                                            : minimize_on_polytope(total, domain);
}

ComparatorResult offline_comparator(const Quadratic& total, const Domain& domain, Rng& rng,
                                    long probes, double tol, bool throw_on_failure) {
  ComparatorResult res;
  res.x = minimize_quadratic(total, domain);
  res.total_loss = total.value(res.x);
  auto probe = [&](const Vector& y) {
    ++res.probes;
    res.worst_improvement = std::max(res.worst_improvement, res.total_loss - total.value(y));
  };
  for (long k = 0; k < probes; ++k) probe(domain.sample(rng));
  if (domain.kind() == DomainKind::kBall) {
    for (long k = 0; k < std::max<long>(1, probes / 10); ++k) {
      probe(domain.radius() * rng.unit_vector(domain.dim()));
    }
  } else {
    for (const Vector& v : domain.vertices()) probe(v);
  }
  res.certified = res.worst_improvement <= tol;
  if (!res.certified && throw_on_failure) {
    throw SolverError("comparator certification failed: a probe improves on x* by " +
                      std::to_string(res.worst_improvement));
  }
  return res;
}

// ---------------------------------------------------------------- runs

AlgoConfig resolve_algorithm(const ExperimentConfig& config, const EnvRealization& env) {
  AlgoConfig a = config.algorithm;
  a.d = config.domain.dim();
  a.T = env.horizon();
  if ((a.mode == Mode::kSmooth || a.mode == Mode::kFixedCurvature) && !a.beta) a.beta = env.beta;
  if (a.mode == Mode::kLipschitz && !a.L) a.L = env.lipschitz;
  return a;
}

Trace run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  EnvSpec spec = config.environment;
  spec.T = config.algorithm.T;
  auto env = std::make_shared<const EnvRealization>(make_env(spec, config.domain));
  return run_experiment(config, std::move(env), options);
}

namespace {

bool is_power_of_two(long t) { return t > 0 && (t & (t - 1)) == 0; }

}  // namespace

Trace run_experiment(const ExperimentConfig& config, std::shared_ptr<const EnvRealization> env,
                     const RunOptions& options) {
  Trace trace;
  trace.config = config;
  trace.env_scale = env->scale;
  trace.env_beta = env->beta;
  trace.env_lipschitz = env->lipschitz;

  const AlgoConfig algo = resolve_algorithm(config, *env);
  const Barrier barrier = Barrier::for_domain(config.domain);
  std::unique_ptr<Learner> learner = make_learner(algo, barrier);
  trace.constants = learner->constants();

  const Domain& domain = config.domain;
  LossOracle oracle(env, learner->needs_gradient());
  QuadraticAccumulator acc(domain.dim());
  Rng probe_rng = Rng(config.environment.seed).fork(0x70726f6265ULL);
  const long T = env->horizon();
  trace.rounds.reserve(static_cast<size_t>(T));

  double cum_loss = 0.0;
  auto checkpoint = [&](long t) {
    ComparatorResult c = offline_comparator(acc.total(), domain, probe_rng,
                                            options.certification_probes, 1e-6, false);
    trace.checkpoints.push_back({t, cum_loss, c.total_loss, cum_loss - c.total_loss, c.certified});
    return c;
  };

  try {
    for (long t = 1; t <= T; ++t) {
      const Vector x = learner->propose();
      Feedback fb;
      fb.f_val = oracle.evaluate(t, x);
      fb.sigma = oracle.reveal(t);
      if (learner->needs_gradient()) fb.gradient = oracle.gradient(t, x);
      const RoundInfo info = learner->step(fb);

      cum_loss += fb.f_val;
      acc.add(env->losses[static_cast<size_t>(t - 1)]);
      const Vector best = minimize_quadratic(acc.total(), domain);

      RoundRecord r;
      r.t = t;
      r.x = x;
      r.f_val = fb.f_val;
      r.sigma_t = fb.sigma;
      r.lambda_t = info.lambda;
      r.eta_t = info.eta;
      r.stability_norm = info.stability_norm;
      r.cum_loss = cum_loss;
      r.cum_regret = cum_loss - acc.total().value(best);
      trace.rounds.push_back(std::move(r));

      if (is_power_of_two(t) || t == T) {
        ComparatorResult c = checkpoint(t);
        if (t == T) trace.comparator = std::move(c);
      }
    }
  } catch (const Error& e) {
    if (options.rethrow) throw;
    trace.error = e.what();
    const long done = static_cast<long>(trace.rounds.size());
    if (done > 0 && (trace.checkpoints.empty() || trace.checkpoints.back().t != done)) {
      trace.comparator = checkpoint(done);
    }
  }
  return trace;
}

// ---------------------------------------------------------------- CSV

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr const char* kCsvHeader =
    "t,sigma_t,lambda_t,eta_t,f_val,stability_norm,cum_loss,cum_regret";

}  // namespace

void write_csv(const Trace& trace, std::ostream& out) {
  out << kCsvHeader << "\n";
  for (const RoundRecord& r : trace.rounds) {
    out << r.t << ',' << fmt(r.sigma_t) << ',' << fmt(r.lambda_t) << ',' << fmt(r.eta_t) << ','
        << fmt(r.f_val) << ',' << fmt(r.stability_norm) << ',' << fmt(r.cum_loss) << ','
        << fmt(r.cum_regret) << "\n";
  }
  if (trace.error) {
    std::string msg = *trace.error;
    std::replace(msg.begin(), msg.end(), '\n', ' ');
    out << "# error: " << msg << "\n";
  }
}

void write_csv(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_csv(trace, out);
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<CsvRow> read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path.string(), "csv");
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) {
    throw ConfigError("unexpected header in " + path.string(), "csv");
  }
  std::vector<CsvRow> rows;
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    CsvRow r;
    const int n = std::sscanf(line.c_str(), "%ld,%lf,%lf,%lf,%lf,%lf,%lf,%lf", &r.t, &r.sigma_t,
                              &r.lambda_t, &r.eta_t, &r.f_val, &r.stability_norm, &r.cum_loss,
                              &r.cum_regret);
    if (n != 8) {
      throw ConfigError("malformed row in " + path.string(), "csv:" + std::to_string(lineno));
    }
    rows.push_back(r);
  }
  return rows;
}

// ---------------------------------------------------------------- fitting

ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& points) {
  ExponentFit fit;
  std::vector<double> xs, ys;
  for (const auto& [t, reg] : points) {
    if (!(reg > 0.0) || !(t > 0.0)) {
      fit.warnings.push_back("excluded checkpoint T=" + fmt(t) + " with regret " + fmt(reg));
      continue;
    }
    xs.push_back(std::log(t));
    ys.push_back(std::log(reg));
  }
  fit.points = static_cast<long>(xs.size());
  if (fit.points < 4) {
    throw ConfigError("fit_exponent needs at least 4 positive checkpoints, got " +
                          std::to_string(fit.points),
                      "checkpoints");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw ConfigError("checkpoints share a single T", "checkpoints");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  return fit;
}

// ---------------------------------------------------------------- sweeps

SweepResult sweep(const ExperimentConfig& config, const SweepOptions& options) {
  if (options.seeds < 1) throw ConfigError("must be positive", "seeds");
  EnvSpec spec = config.environment;
  spec.T = config.algorithm.T;
  auto env = std::make_shared<const EnvRealization>(make_env(spec, config.domain));

  SweepResult result;
  result.traces.resize(static_cast<size_t>(options.seeds));
  if (options.out_dir) std::filesystem::create_directories(*options.out_dir);

  std::atomic<long> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    for (long k = next++; k < options.seeds; k = next++) {
      try {
        ExperimentConfig c = config;
        c.algorithm.seed = config.algorithm.seed + static_cast<std::uint64_t>(k);
        Trace tr = run_experiment(c, env, options.run);
        if (options.out_dir) {
          write_csv(tr, *options.out_dir / ("seed_" + std::to_string(c.algorithm.seed) + ".csv"));
        }
        if (!options.keep_rounds) {
          tr.rounds.clear();
          tr.rounds.shrink_to_fit();
        }
        result.traces[static_cast<size_t>(k)] = std::move(tr);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp<unsigned>(threads, 1u, static_cast<unsigned>(options.seeds));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);

  std::map<long, std::vector<double>> by_t;
  for (const Trace& tr : result.traces) {
    for (const Checkpoint& c : tr.checkpoints) by_t[c.t].push_back(c.regret);
  }
  std::vector<std::pair<double, double>> fit_points;
  for (const auto& [t, regs] : by_t) {
    SeedSummary s;
    s.t = t;
    s.seeds = static_cast<long>(regs.size());
    for (double r : regs) s.mean += r;
    s.mean /= static_cast<double>(regs.size());
    if (regs.size() > 1) {
      double var = 0.0;
      for (double r : regs) var += (r - s.mean) * (r - s.mean);
      var /= static_cast<double>(regs.size() - 1);
      s.std_error = std::sqrt(var / static_cast<double>(regs.size()));
    }
    result.checkpoints.push_back(s);
    if (t >= options.min_fit_t && is_power_of_two(t)) {
      fit_points.emplace_back(static_cast<double>(t), s.mean);
    }
  }
  try {
    result.fit = fit_exponent(fit_points);
  } catch (const ConfigError&) {
    result.fit.reset();
  }
  return result;
}

}  // namespace curvbco
