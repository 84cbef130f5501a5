#include "curvbco/errors.hpp"
#include "curvbco/harness.hpp"
#include "test_util.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace curvbco;

namespace {

ExperimentConfig small_config(Mode mode, long T, std::uint64_t seed = 3) {
  ExperimentConfig c;
  c.domain = Domain::ball(2, 1.0);
  c.algorithm.mode = mode;
  c.algorithm.d = 2;
  c.algorithm.T = T;
  c.algorithm.overrides = {1e-5, 1e-5, 100.0};
  c.algorithm.seed = seed;
  c.environment.T = T;
  c.environment.seed = 11;
  return c;
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("curvbco_test_" + name);
}

}  // namespace

TEST_CASE("comparator on a ball") {
  Rng rng(1);
  const Domain ball = Domain::ball(2, 1.0);
  const Vector c = Eigen::Vector2d(0.3, -0.4);
  QuadraticAccumulator acc(2);
  for (int t = 0; t < 5; ++t) {
    acc.add({Matrix::Identity(2, 2), -c, 0.5 * c.squaredNorm()});
  }
  CHECK((minimize_quadratic(acc.total(), ball) - c).norm() <= 1e-9);

  const Vector c1 = Eigen::Vector2d(0.5, 0.1), c2 = Eigen::Vector2d(-0.1, 0.3);
  QuadraticAccumulator two(2);
  two.add({Matrix::Identity(2, 2), -c1, 0.0});
  two.add({Matrix::Identity(2, 2), -c2, 0.0});
  CHECK((minimize_quadratic(two.total(), ball) - 0.5 * (c1 + c2)).norm() <= 1e-9);

  QuadraticAccumulator lin(2);
  Vector sum = Vector::Zero(2);
  for (int t = 0; t < 10; ++t) {
    const Vector a = rng.normal_vector(2) + Eigen::Vector2d(1.0, 2.0);
    sum += a;
    lin.add({Matrix::Zero(2, 2), a, 0.0});
  }
  const ComparatorResult r = offline_comparator(lin.total(), ball, rng);
  CHECK((r.x + sum.normalized()).norm() <= 1e-9);
  CHECK(r.total_loss == doctest::Approx(-sum.norm()));
  CHECK(r.certified);

  // singular Hessian with the unconstrained minimizers crossing the sphere
  QuadraticAccumulator flat(2);
  Matrix a = Matrix::Zero(2, 2);
  a(0, 0) = 1.0;
  flat.add({a, Eigen::Vector2d(-0.2, 3.0), 0.0});
  const Vector x = minimize_quadratic(flat.total(), ball);
  CHECK(x.norm() == doctest::Approx(1.0));
  double best = INFINITY;
  for (int k = 0; k < 100000; ++k) {
    const double th = 2.0 * M_PI * k / 100000.0;
    best = std::min(best, flat.total().value(Eigen::Vector2d(std::cos(th), std::sin(th))));
  }
  CHECK(flat.total().value(x) <= best + 1e-9);
}

TEST_CASE("comparator on a polytope") {
  Rng rng(2);
  Matrix box(4, 2);
  box << 1, 0, 0, 1, -1, 0, 0, -1;
  const Domain dom = Domain::polytope(box, Vector::Ones(4));
  QuadraticAccumulator acc(2);
  acc.add({Matrix::Identity(2, 2), Eigen::Vector2d(-3.0, 0.2), 0.0});
  // clipped coordinatewise: (min(3,1), -0.2)
  CHECK((minimize_quadratic(acc.total(), dom) - Eigen::Vector2d(1.0, -0.2)).norm() <= 1e-6);
  QuadraticAccumulator lin(2);
  lin.add({Matrix::Zero(2, 2), Eigen::Vector2d(1.0, -2.0), 0.0});
  CHECK((minimize_quadratic(lin.total(), dom) - Eigen::Vector2d(-1.0, 1.0)).norm() <= 1e-6);
  for (int k = 0; k < 10; ++k) {
    QuadraticAccumulator q(2);
    for (int t = 0; t < 20; ++t) {
      const double s = rng.uniform(0.0, 1.0);
      q.add({s * Matrix::Identity(2, 2), 2.0 * rng.normal_vector(2), rng.normal()});
    }
    CHECK(offline_comparator(q.total(), dom, rng).certified);
  }
}

TEST_CASE("run_experiment") {
  const ExperimentConfig cfg = small_config(Mode::kSmooth, 300);
  const Trace a = run_experiment(cfg);
  const Trace b = run_experiment(cfg);
  REQUIRE_FALSE(a.error);
  REQUIRE(a.rounds.size() == 300);
  double cum = 0.0;
  for (size_t i = 0; i < a.rounds.size(); ++i) {
    const RoundRecord& r = a.rounds[i];
    cum += r.f_val;
    CHECK(r.t == static_cast<long>(i) + 1);
    CHECK(r.lambda_t > 0.0);
    CHECK(r.lambda_t < 1.0);
    CHECK(std::abs(r.cum_loss - cum) <= 1e-12);
    CHECK(r.x == b.rounds[i].x);
  }
  CHECK(a.regret() == b.regret());
  CHECK(a.regret() == doctest::Approx(cum - a.comparator.total_loss).epsilon(1e-12));
  CHECK(a.comparator.certified);
  CHECK(a.checkpoints.back().t == 300);
  CHECK(a.checkpoints.front().t == 1);
  for (size_t i = 1; i + 1 < a.checkpoints.size(); ++i) {
    CHECK(a.checkpoints[i].t == 2 * a.checkpoints[i - 1].t);
  }

  ExperimentConfig other = cfg;
  other.algorithm.seed = 4;
  CHECK(run_experiment(other).rounds[5].x != a.rounds[5].x);
}

TEST_CASE("run_experiment with every mode") {
  for (Mode m : {Mode::kSmooth, Mode::kLipschitz, Mode::kAogd, Mode::kFixedCurvature}) {
    ExperimentConfig cfg = small_config(m, 200);
    cfg.algorithm.fixed_sigma = 0.5;
    cfg.algorithm.fixed_eta = 0.01;
    const Trace t = run_experiment(cfg);
    CHECK_FALSE(t.error);
    CHECK(t.rounds.size() == 200);
    for (const RoundRecord& r : t.rounds) {
      CHECK(cfg.domain.contains(r.x).feasible);
      // shifted losses are nonnegative, so the shifted cumulative loss grows
      CHECK(r.cum_loss + static_cast<double>(r.t) >= 0.0);
    }
  }
}

TEST_CASE("csv output") {
  const ExperimentConfig cfg = small_config(Mode::kSmooth, 3);
  const Trace t = run_experiment(cfg);
  std::ostringstream os;
  write_csv(t, os);
  std::istringstream is(os.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(is, line)) lines.push_back(line);
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "t,sigma_t,lambda_t,eta_t,f_val,stability_norm,cum_loss,cum_regret");

  const ExperimentConfig big = small_config(Mode::kLipschitz, 500);
  const Trace tb = run_experiment(big);
  const auto path = temp_path("trace.csv");
  write_csv(tb, path);
  const std::vector<CsvRow> rows = read_csv(path);
  REQUIRE(rows.size() == 500);
  double cum = 0.0;
  for (const CsvRow& r : rows) cum += r.f_val;
  // regret recomputed from the CSV alone
  CHECK(std::abs(rows.back().cum_loss - cum) <= 1e-9);
  CHECK(std::abs(rows.back().cum_loss - tb.comparator.total_loss - rows.back().cum_regret) <=
        1e-9);
  CHECK(rows.back().cum_regret == tb.regret());
  std::filesystem::remove(path);
}

TEST_CASE("config round trip") {
  ExperimentConfig c = small_config(Mode::kLipschitz, 1000, 42);
  c.algorithm.L = 2.5;
  c.environment.family = Family::kGlm;
  c.environment.schedule.kind = ScheduleKind::kMixture;
  c.environment.schedule.M = 100;
  c.environment.schedule.placement = Placement::kRandom;
  c.environment.users = 7;
  const auto path = temp_path("config.json");
  save_config(c, path);
  CHECK(load_config(path) == c);
  CHECK(parse_config(config_to_json(c)) == c);
  std::filesystem::remove(path);

  Matrix box(4, 2);
  box << 1, 0, 0, 1, -1, 0, 0, -1;
  ExperimentConfig p = small_config(Mode::kSmooth, 50);
  p.domain = Domain::polytope(box, Eigen::Vector4d(1.0, 2.0, 1.0, 0.5));
  CHECK(parse_config(config_to_json(p)) == p);
}

TEST_CASE("config errors name the offending key") {
  const std::string good = R"({"domain":{"kind":"ball","radius":1.0,"dim":2},
    "algorithm":{"mode":"smooth","T":100,"seed":1},
    "environment":{"family":"quadratic","schedule":{"kind":"zero"},"seed":1}})";
  CHECK_NOTHROW(parse_config(good));
  auto path_of = [](const std::string& text) {
    try {
      parse_config(text);
    } catch (const ConfigError& e) {
      return e.path();
    }
    return std::string("<none>");
  };
  std::string typo = good;
  typo.replace(typo.find("\"seed\":1}"), 9, "\"sed\":1}");
  CHECK(path_of(typo) == "algorithm.sed");
  std::string bad_mode = good;
  bad_mode.replace(bad_mode.find("smooth"), 6, "smoth");
  CHECK(path_of(bad_mode) == "algorithm.mode");
  std::string short_t = good;
  short_t.replace(short_t.find("100"), 3, "2");
  CHECK(path_of(short_t) == "algorithm.T");
  CHECK(path_of("{\"domain\": ") == "$");
  std::string radius = good;
  radius.replace(radius.find("1.0"), 3, "\"x\"");
  CHECK(path_of(radius) == "domain.radius");
  CHECK_THROWS_AS(load_config(temp_path("missing.json")), ConfigError);
}

TEST_CASE("fit_exponent") {
  std::vector<std::pair<double, double>> pts;
  for (int k = 10; k <= 16; ++k) {
    const double t = std::ldexp(1.0, k);
    pts.emplace_back(t, 3.0 * std::sqrt(t));
  }
  const ExponentFit f = fit_exponent(pts);
  CHECK(std::abs(f.slope - 0.5) <= 1e-9);
  CHECK(std::abs(f.intercept - std::log(3.0)) <= 1e-9);
  CHECK(f.r2 == doctest::Approx(1.0));

  Rng rng(6);
  pts.clear();
  for (int k = 10; k <= 16; ++k) {
    const double t = std::ldexp(1.0, k);
    pts.emplace_back(t, std::pow(t, 2.0 / 3.0) * (1.0 + 0.01 * rng.normal()));
  }
  CHECK(std::abs(fit_exponent(pts).slope - 2.0 / 3.0) <= 0.02);

  pts.emplace_back(2.0, -1.0);
  const ExponentFit w = fit_exponent(pts);
  CHECK(w.points == 7);
  CHECK(w.warnings.size() == 1);

  CHECK_THROWS_AS(fit_exponent({{1024.0, 5.0}}), ConfigError);
}

TEST_CASE("sweep") {
  ExperimentConfig cfg = small_config(Mode::kSmooth, 1024);
  SweepOptions o;
  o.seeds = 4;
  o.min_fit_t = 64;
  o.threads = 2;
  const auto dir = temp_path("sweep");
  std::filesystem::remove_all(dir);
  o.out_dir = dir;
  const SweepResult r = sweep(cfg, o);
  REQUIRE(r.traces.size() == 4);
  REQUIRE(r.fit);
  CHECK(r.fit->points == 5);
  const SeedSummary& last = r.checkpoints.back();
  CHECK(last.t == 1024);
  CHECK(last.seeds == 4);
  double mean = 0.0;
  for (const Trace& t : r.traces) mean += t.checkpoints.back().regret / 4.0;
  CHECK(last.mean == doctest::Approx(mean));
  for (std::uint64_t s = 3; s < 7; ++s) {
    CHECK(std::filesystem::exists(dir / ("seed_" + std::to_string(s) + ".csv")));
  }
  // a single-threaded sweep gives the same numbers
  o.threads = 1;
  o.out_dir.reset();
  CHECK(sweep(cfg, o).checkpoints.back().mean == last.mean);
  std::filesystem::remove_all(dir);
}
