#pragma once

#include "curvbco/algorithms.hpp"
#include "curvbco/barrier.hpp"
#include "curvbco/environments.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace curvbco {

struct ExperimentConfig {
  Domain domain = Domain::ball(1, 1.0);
  AlgoConfig algorithm;  // algorithm.d and algorithm.T mirror the domain and environment
  EnvSpec environment;

  bool operator==(const ExperimentConfig& other) const;
};

/// Parses the JSON experiment schema (see README). Missing or mistyped keys
/// raise ConfigError naming the key path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_json(const ExperimentConfig& config);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

/// Running sums of the quadratic coefficients, so that sum_{s<=t} f_s is
/// again a quadratic.
class QuadraticAccumulator {
 public:
  explicit QuadraticAccumulator(Eigen::Index dim);
  void add(const Quadratic& f);
  const Quadratic& total() const { return sum_; }

 private:
  Quadratic sum_;
};

struct ComparatorResult {
  Vector x;
  double total_loss = 0.0;
  long probes = 0;
  double worst_improvement = 0.0;  // max over probes of F(x*) - F(probe), clipped at 0
  bool certified = true;
};

/// argmin over the domain of a convex quadratic F. Ball: exact trust-region
/// solution from the eigendecomposition. Polytope: log-barrier path
/// following to a duality gap below 1e-10.
Vector minimize_quadratic(const Quadratic& total, const Domain& domain);

/// minimize_quadratic followed by certification against `probes` random
/// domain points plus boundary points. Throws SolverError if a probe beats
/// x* by more than `tol` and `throw_on_failure` is set.
ComparatorResult offline_comparator(const Quadratic& total, const Domain& domain, Rng& rng,
                                    long probes = 1000, double tol = 1e-6,
                                    bool throw_on_failure = true);

struct RoundRecord {
  long t = 0;
  Vector x;
  double f_val = 0.0;
  double sigma_t = 0.0;
  double lambda_t = 0.0;
  double eta_t = 0.0;
  double stability_norm = 0.0;
  double cum_loss = 0.0;
  double cum_regret = 0.0;  // cum_loss minus the best fixed loss over rounds 1..t
};

struct Checkpoint {
  long t = 0;
  double cum_loss = 0.0;
  double comparator_loss = 0.0;
  double regret = 0.0;
  bool certified = true;
};

struct Trace {
  ExperimentConfig config;
  DerivedConstants constants;
  double env_scale = 1.0;
  double env_beta = 0.0;
  double env_lipschitz = 0.0;
  std::vector<RoundRecord> rounds;
  ComparatorResult comparator;
  std::vector<Checkpoint> checkpoints;  // t = 2^k and the final round
  std::optional<std::string> error;     // set when the run stopped early

  double regret() const { return rounds.empty() ? 0.0 : rounds.back().cum_regret; }
};

struct RunOptions {
  long certification_probes = 1000;
  /// Rethrow the first error instead of returning a partial trace.
  bool rethrow = false;
};

/// beta (smooth/fixed_curvature) and L (lipschitz) default to the
/// environment's reported constants when the config leaves them unset.
AlgoConfig resolve_algorithm(const ExperimentConfig& config, const EnvRealization& env);

Trace run_experiment(const ExperimentConfig& config, const RunOptions& options = {});
Trace run_experiment(const ExperimentConfig& config, std::shared_ptr<const EnvRealization> env,
                     const RunOptions& options = {});

/// Header t,sigma_t,lambda_t,eta_t,f_val,stability_norm,cum_loss,cum_regret;
/// values in %.17g. A failed run ends with a "# error: ..." line.
void write_csv(const Trace& trace, std::ostream& out);
void write_csv(const Trace& trace, const std::filesystem::path& path);

struct CsvRow {
  long t = 0;
  double sigma_t = 0.0, lambda_t = 0.0, eta_t = 0.0, f_val = 0.0, stability_norm = 0.0,
         cum_loss = 0.0, cum_regret = 0.0;
};
std::vector<CsvRow> read_csv(const std::filesystem::path& path);

struct ExponentFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  long points = 0;
  std::vector<std::string> warnings;
};

/// Least squares of ln Reg against ln T. Nonpositive regrets are dropped with
/// a warning; fewer than 4 usable points is a ConfigError.
ExponentFit fit_exponent(const std::vector<std::pair<double, double>>& t_and_regret);

struct SeedSummary {
  long t = 0;
  double mean = 0.0;
  double std_error = 0.0;
  long seeds = 0;
};

struct SweepResult {
  std::vector<Trace> traces;  // rounds dropped unless keep_rounds
  std::vector<SeedSummary> checkpoints;
  std::optional<ExponentFit> fit;
};

struct SweepOptions {
  long seeds = 10;
  long min_fit_t = 1024;
  unsigned threads = 0;  // 0: hardware concurrency
  bool keep_rounds = false;
  std::optional<std::filesystem::path> out_dir;  // per-seed CSVs
  RunOptions run;
};

/// Runs algorithm seeds base, base+1, ... on one shared realization and
/// aggregates the checkpoint regret as mean +- standard error.
SweepResult sweep(const ExperimentConfig& config, const SweepOptions& options);

}  // namespace curvbco
