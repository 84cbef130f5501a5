#include "curvbco/errors.hpp"
#include "curvbco/harness.hpp"
#include "curvbco/validation.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <iostream>
#include <map>

namespace {

using namespace curvbco;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kConfigError = 2;

int cmd_run(const std::string& config_path, const std::string& out_path, long probes) {
  const ExperimentConfig cfg = load_config(config_path);
  RunOptions opts;
  opts.certification_probes = probes;
  const Trace trace = run_experiment(cfg, opts);
  write_csv(trace, std::filesystem::path(out_path));
  json summary = {{"rounds", trace.rounds.size()},
                  {"regret", trace.regret()},
                  {"comparator_loss", trace.comparator.total_loss},
                  {"comparator_certified", trace.comparator.certified},
                  {"lambda0", trace.constants.lambda0},
                  {"eta1", trace.constants.eta1},
                  {"rho", trace.constants.rho}};
  if (trace.error) summary["error"] = *trace.error;
  std::cout << summary.dump(2) << "\n";
  if (trace.error) {
    std::cerr << "run stopped early: " << *trace.error << "\n";
    return kFailed;
  }
  return trace.comparator.certified ? kOk : kFailed;
}

int cmd_validate(const std::string& config_path, long samples, long trials, std::uint64_t seed) {
  const ExperimentConfig cfg = load_config(config_path);
  const std::vector<PropertyCheck> checks = validate_experiment(cfg, samples, trials, seed);
  std::cout << checks_to_json(checks) << "\n";
  for (const PropertyCheck& c : checks) {
    if (c.failures > 0) return kFailed;
  }
  return kOk;
}

int cmd_fit(const std::vector<std::string>& files, long min_t) {
  std::map<long, std::pair<double, long>> sums;
  for (const std::string& f : files) {
    for (const CsvRow& r : read_csv(f)) {
      if (r.t < min_t || (r.t & (r.t - 1)) != 0) continue;
      auto& s = sums[r.t];
      s.first += r.cum_regret;
      s.second += 1;
    }
  }
  std::vector<std::pair<double, double>> points;
  for (const auto& [t, s] : sums) {
    points.emplace_back(static_cast<double>(t), s.first / static_cast<double>(s.second));
  }
  const ExponentFit fit = fit_exponent(points);
  for (const std::string& w : fit.warnings) std::cerr << "warning: " << w << "\n";
  json out = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"r2", fit.r2},
              {"points", fit.points}};
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int cmd_sweep(const std::string& config_path, long seeds, const std::string& out_dir,
              unsigned threads, long min_t) {
  const ExperimentConfig cfg = load_config(config_path);
  SweepOptions opts;
  opts.seeds = seeds;
  opts.threads = threads;
  opts.min_fit_t = min_t;
  if (!out_dir.empty()) opts.out_dir = out_dir;
  const SweepResult res = sweep(cfg, opts);
  json cps = json::array();
  for (const SeedSummary& s : res.checkpoints) {
    cps.push_back({{"t", s.t}, {"mean_regret", s.mean}, {"std_error", s.std_error},
                   {"seeds", s.seeds}});
  }
  json out = {{"checkpoints", cps}};
  if (res.fit) {
    out["fit"] = {{"slope", res.fit->slope}, {"intercept", res.fit->intercept},
                  {"r2", res.fit->r2}, {"points", res.fit->points}};
  }
  long failed = 0;
  for (const Trace& t : res.traces) failed += t.error ? 1 : 0;
  out["failed_runs"] = failed;
  std::cout << out.dump(2) << "\n";
  return failed == 0 ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curvature-adaptive bandit convex optimization simulator"};
  app.require_subcommand(1);

  std::string config, out, out_dir;
  long probes = 1000, samples = 10000, trials = 100, seeds = 10, min_t = 1024;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::vector<std::string> csv_files;

  CLI::App* run = app.add_subcommand("run", "Run one experiment and write its per-round CSV");
  run->add_option("--config", config, "JSON experiment config")->required();
  run->add_option("--out", out, "CSV output path")->required();
  run->add_option("--probes", probes, "Random probes certifying the comparator");

  CLI::App* validate = app.add_subcommand("validate", "Environment and barrier property checks");
  validate->add_option("--config", config, "JSON experiment config")->required();
  validate->add_option("--samples", samples, "Point pairs for the environment checks");
  validate->add_option("--trials", trials, "Random points per barrier property");
  validate->add_option("--seed", seed, "Seed for the check points");

  CLI::App* fit = app.add_subcommand("fit-exponent", "Fit ln regret against ln T");
  fit->add_option("--csv", csv_files, "Run CSVs (regret averaged across files)")->required();
  fit->add_option("--min-t", min_t, "Smallest checkpoint used");

  CLI::App* sw = app.add_subcommand("sweep", "Run several algorithm seeds on one realization");
  sw->add_option("--config", config, "JSON experiment config")->required();
  sw->add_option("--seeds", seeds, "Number of algorithm seeds")->required();
  sw->add_option("--out-dir", out_dir, "Directory for per-seed CSVs");
  sw->add_option("--threads", threads, "Worker threads (0: all cores)");
  sw->add_option("--min-t", min_t, "Smallest checkpoint used in the fit");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config, out, probes);
    if (*validate) return cmd_validate(config, samples, trials, seed);
    if (*fit) return cmd_fit(csv_files, min_t);
    if (*sw) return cmd_sweep(config, seeds, out_dir, threads, min_t);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kFailed;
}
