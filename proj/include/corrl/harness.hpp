#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "corrl/bonus_sim.hpp"
#include "corrl/lowerbound.hpp"
#include "corrl/mdp.hpp"
#include "corrl/oracle.hpp"
#include "corrl/rlsvi.hpp"

namespace corrl {

/// Invalid configuration: unknown key or name, malformed value, missing seed.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind { coverage, no_coverage, bonus_sweep, lower_bound_tree, lower_bound_bandit, oracle_bench, kappa };

std::string to_string(ExperimentKind kind);
ExperimentKind parse_experiment(const std::string& name);

/// Flat experiment configuration. Every field has a key in the key=value
/// text format (see `config_keys()`); `config_to_text` echoes all of them.
struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::coverage;

  // Environment: demo-chain | random-tabular | random-simplex | file
  std::string instance = "demo-chain";
  std::string mdp_path;
  int num_states = 3;
  int num_actions = 2;
  int dim = 3;
  int horizon = 2;
  double sigma = 0.5;
  std::uint64_t instance_seed = 1;

  // Offline distribution: uniform | no-coverage | file. no-coverage is
  // uniform over every pair except (drop_state, drop_action).
  std::string nu = "uniform";
  std::string nu_path;
  int drop_state = 2;
  int drop_action = 1;

  // Comparator: optimal | file
  std::string comparator = "optimal";
  std::string comparator_path;

  // Corruption: none | value-poison | random | concentrated
  double epsilon = 0.0;
  std::string attack = "value-poison";
  double attack_magnitude = 1.0;
  int attack_state = 0;  // target pair of value-poison / concentrated
  int attack_action = 1;

  OracleSettings oracle;
  std::optional<double> oracle_epsilon;  // defaults to epsilon

  /// bonus.sigma is always the MDP's noise scale; bonus.epsilon and
  /// bonus.rho come from the optionals below (defaults: epsilon and the
  /// MDP's parameter bound).
  BonusConfig bonus;
  std::optional<double> bonus_epsilon;
  std::optional<double> bonus_rho;

  std::vector<std::size_t> n_grid{1000, 10000};
  int trials = 10;
  std::optional<std::uint64_t> seed;
  std::string out = "results";
  int jobs = 1;
  bool paper_scale = false;

  SweepConfig sweep;

  // Lower bounds.
  int tree_states = 3;
  int tree_actions = 4;
  int tree_horizon = 4;
  double tree_down_weight = 0.5;
  double bandit_p = 0.1;
  std::string bandit_learner = "empirical-argmax";
  std::size_t lb_samples = 10000;

  // Oracle benchmark.
  std::vector<double> bench_eps_grid{0.0, 0.02, 0.05, 0.1};
  std::vector<std::size_t> bench_n_grid{1000, 10000};
  double bench_attack_magnitude = 10.0;
  double bench_noise = 0.1;
  int bench_dim = 3;

  /// Resolved oracle contamination level.
  double oracle_eps() const { return oracle_epsilon.value_or(epsilon); }
  /// Throws ConfigError describing the first problem found.
  void validate() const;
};

/// Every recognized key, in echo order.
const std::vector<std::string>& config_keys();

/// Sets one key. Throws ConfigError for unknown keys or malformed values.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
std::string get_config_value(const ExperimentConfig& cfg, const std::string& key);

/// Parses key=value lines ('#' comments) on top of `base`.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
/// Full resolved config, one key=value per line.
std::string config_to_text(const ExperimentConfig& cfg);

/// Environment, offline distribution and comparator built from the config.
struct Environment {
  LinearMdp mdp;
  OfflineDistribution nu;
  PolicyTable comparator;
  PolicyTable optimal;
};

Environment build_environment(const ExperimentConfig& cfg);

/// One R-LSVI trial.
struct TrialRecord {
  std::size_t n = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  bool ok = true;
  std::string error;
  double subopt_optimal = 0.0;
  double subopt_comparator = 0.0;
  double validity_margin = 0.0;   // <= 0 when the bonus is valid everywhere
  double pessimism_bound = 0.0;   // 2 sum_h E_{d^comparator}[Gamma_h]
  double mean_bonus = 0.0;        // average of Gamma over (h, s, a)
  std::size_t corrupted = 0;
  double wall_seconds = 0.0;      // not part of any deterministic output
};

/// Trial seed: derive_seed(master, trial). The data, split and attack
/// streams are sub-streams of it and do not depend on N.
TrialRecord run_trial(const ExperimentConfig& cfg, const Environment& env, std::size_t n, int trial);

struct Quantiles {
  double median = 0.0;
  double p5 = 0.0;
  double p95 = 0.0;
};

/// Linear-interpolation quantile of a non-empty sample.
double quantile(std::vector<double> values, double q);
Quantiles summarize(const std::vector<double>& values);

/// Named output files plus the failure count.
struct ResultBundle {
  std::string config_echo;
  std::vector<std::pair<std::string, std::string>> files;  // name -> content, in write order
  std::size_t failures = 0;
  std::vector<TrialRecord> records;  // R-LSVI experiments only
};

/// Runs all trials (up to cfg.jobs concurrently) and merges them by
/// (N index, trial index).
ResultBundle run_experiment(const ExperimentConfig& cfg);

/// kappa of the comparator's occupancy covariance against nu's.
double kappa_report(const LinearMdp& mdp, const OfflineDistribution& nu, const PolicyTable& comparator);
/// "inf" for infinity, otherwise the shortest round-trip decimal.
std::string format_real(double x);

/// CSV of R-LSVI trial records (deterministic columns only).
std::string trials_csv(const std::vector<TrialRecord>& records);

/// Writes config.txt, every bundle file and manifest.json (paths and SHA-256
/// hashes) under out_dir. Returns the manifest text.
std::string emit_results(const ResultBundle& bundle, const std::filesystem::path& out_dir);

}  // namespace corrl
