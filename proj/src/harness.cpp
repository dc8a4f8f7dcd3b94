#include "corrl/harness.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <thread>

#include "corrl/adversary.hpp"
#include "corrl/instances.hpp"
#include "corrl/io.hpp"
#include "corrl/rng.hpp"

namespace corrl {

using json = nlohmann::ordered_json;

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::coverage: return "coverage";
    case ExperimentKind::no_coverage: return "no-coverage";
    case ExperimentKind::bonus_sweep: return "bonus-sweep";
    case ExperimentKind::lower_bound_tree: return "lower-bound-tree";
    case ExperimentKind::lower_bound_bandit: return "lower-bound-bandit";
    case ExperimentKind::oracle_bench: return "oracle-bench";
    case ExperimentKind::kappa: return "kappa";
  }
  return "coverage";
}

ExperimentKind parse_experiment(const std::string& name) {
  for (auto k : {ExperimentKind::coverage, ExperimentKind::no_coverage, ExperimentKind::bonus_sweep,
                 ExperimentKind::lower_bound_tree, ExperimentKind::lower_bound_bandit, ExperimentKind::oracle_bench,
                 ExperimentKind::kappa}) {
    if (to_string(k) == name) return k;
  }
  throw ConfigError("unknown experiment: " + name);
}

std::string format_real(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  T out{};
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    throw ConfigError("bad value for " + key + ": '" + value + "'");
  }
  return out;
}

double parse_real(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "inf") return std::numeric_limits<double>::infinity();
  return parse_number<double>(key, v);
}

bool parse_bool(const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (v == "1" || v == "true" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "no") return false;
  throw ConfigError("bad value for " + key + ": '" + value + "'");
}

template <class T, class Parse>
std::vector<T> parse_list(const std::string& key, const std::string& value, Parse parse) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse(key, item));
  if (out.empty()) throw ConfigError("empty list for " + key);
  return out;
}

template <class T>
std::string join(const std::vector<T>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ',';
    if constexpr (std::is_floating_point_v<T>) {
      out += format_real(v[i]);
    } else {
      out += std::to_string(v[i]);
    }
  }
  return out;
}

struct KeySpec {
  std::string name;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define CORRL_INT(key, field)                                                                           \
  KeySpec {                                                                                             \
    key, [](ExperimentConfig& c, const std::string& v) { c.field = parse_number<int>(key, v); },       \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                               \
  }
#define CORRL_SIZE(key, field)                                                                          \
  KeySpec {                                                                                             \
    key, [](ExperimentConfig& c, const std::string& v) { c.field = parse_number<std::size_t>(key, v); }, \
        [](const ExperimentConfig& c) { return std::to_string(c.field); }                               \
  }
#define CORRL_REAL(key, field)                                                                       \
  KeySpec {                                                                                          \
    key, [](ExperimentConfig& c, const std::string& v) { c.field = parse_real(key, v); },            \
        [](const ExperimentConfig& c) { return format_real(c.field); }                               \
  }
#define CORRL_STR(key, field)                                                                        \
  KeySpec {                                                                                          \
    key, [](ExperimentConfig& c, const std::string& v) { c.field = trim(v); },                       \
        [](const ExperimentConfig& c) { return c.field; }                                            \
  }
#define CORRL_BOOL(key, field)                                                                       \
  KeySpec {                                                                                          \
    key, [](ExperimentConfig& c, const std::string& v) { c.field = parse_bool(key, v); },            \
        [](const ExperimentConfig& c) { return std::string(c.field ? "1" : "0"); }                   \
  }
#define CORRL_OPT_REAL(key, field)                                                                   \
  KeySpec {                                                                                          \
    key,                                                                                             \
        [](ExperimentConfig& c, const std::string& v) {                                              \
          if (trim(v) == "auto") {                                                                   \
            c.field.reset();                                                                         \
          } else {                                                                                   \
            c.field = parse_real(key, v);                                                            \
          }                                                                                          \
        },                                                                                           \
        [](const ExperimentConfig& c) { return c.field ? format_real(*c.field) : std::string("auto"); } \
  }

const std::vector<KeySpec>& key_table() {
  static const std::vector<KeySpec> table = {
      {"experiment", [](ExperimentConfig& c, const std::string& v) { c.experiment = parse_experiment(trim(v)); },
       [](const ExperimentConfig& c) { return to_string(c.experiment); }},
      {"seed",
       [](ExperimentConfig& c, const std::string& v) { c.seed = parse_number<std::uint64_t>("seed", v); },
       [](const ExperimentConfig& c) { return c.seed ? std::to_string(*c.seed) : std::string(); }},
      CORRL_STR("instance", instance),
      CORRL_STR("mdp_path", mdp_path),
      CORRL_INT("S", num_states),
      CORRL_INT("A", num_actions),
      CORRL_INT("d", dim),
      CORRL_INT("H", horizon),
      CORRL_REAL("sigma", sigma),
      {"instance_seed",
       [](ExperimentConfig& c, const std::string& v) {
         c.instance_seed = parse_number<std::uint64_t>("instance_seed", v);
       },
       [](const ExperimentConfig& c) { return std::to_string(c.instance_seed); }},
      CORRL_STR("nu", nu),
      CORRL_STR("nu_path", nu_path),
      CORRL_INT("drop_state", drop_state),
      CORRL_INT("drop_action", drop_action),
      CORRL_STR("comparator", comparator),
      CORRL_STR("comparator_path", comparator_path),
      CORRL_REAL("epsilon", epsilon),
      CORRL_STR("attack", attack),
      CORRL_REAL("attack_magnitude", attack_magnitude),
      CORRL_INT("attack_state", attack_state),
      CORRL_INT("attack_action", attack_action),
      {"oracle", [](ExperimentConfig& c, const std::string& v) {
         try {
           c.oracle.kind = parse_estimator(trim(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       },
       [](const ExperimentConfig& c) { return to_string(c.oracle.kind); }},
      CORRL_OPT_REAL("oracle_epsilon", oracle_epsilon),
      CORRL_INT("oracle_max_iters", oracle.max_iters),
      CORRL_REAL("huber_delta", oracle.huber_delta),
      CORRL_REAL("oracle_tol", oracle.tol),
      CORRL_REAL("ridge_scale", oracle.ridge_scale),
      {"bonus", [](ExperimentConfig& c, const std::string& v) {
         try {
           c.bonus.mode = parse_bonus_mode(trim(v));
         } catch (const std::invalid_argument& e) {
           throw ConfigError(e.what());
         }
       },
       [](const ExperimentConfig& c) { return to_string(c.bonus.mode); }},
      CORRL_OPT_REAL("bonus_epsilon", bonus_epsilon),
      CORRL_OPT_REAL("rho", bonus_rho),
      CORRL_REAL("lambda_const", bonus.lambda_const),
      CORRL_REAL("delta", bonus.delta),
      CORRL_REAL("c1", bonus.constants.c1),
      CORRL_REAL("c2", bonus.constants.c2),
      CORRL_REAL("poly_d_exponent", bonus.constants.poly_d_exponent),
      CORRL_BOOL("conservative_gamma", bonus.conservative_gamma),
      {"n_grid",
       [](ExperimentConfig& c, const std::string& v) {
         c.n_grid = parse_list<std::size_t>("n_grid", v, parse_number<std::size_t>);
       },
       [](const ExperimentConfig& c) { return join(c.n_grid); }},
      CORRL_INT("trials", trials),
      CORRL_STR("out", out),
      CORRL_INT("jobs", jobs),
      CORRL_BOOL("paper_scale", paper_scale),
      CORRL_INT("sweep_dim", sweep.dim),
      CORRL_SIZE("sweep_n", sweep.n_train),
      CORRL_REAL("sweep_epsilon", sweep.epsilon),
      CORRL_INT("sweep_horizon", sweep.horizon),
      CORRL_REAL("sweep_ridge", sweep.ridge),
      {"sweep_grid",
       [](ExperimentConfig& c, const std::string& v) {
         c.sweep.lambda_min_grid = parse_list<double>("sweep_grid", v, parse_real);
       },
       [](const ExperimentConfig& c) { return join(c.sweep.lambda_min_grid); }},
      CORRL_SIZE("sweep_test_points", sweep.test_points),
      CORRL_INT("tree_S", tree_states),
      CORRL_INT("tree_A", tree_actions),
      CORRL_INT("tree_H", tree_horizon),
      CORRL_REAL("tree_down_weight", tree_down_weight),
      CORRL_REAL("bandit_p", bandit_p),
      CORRL_STR("bandit_learner", bandit_learner),
      CORRL_SIZE("lb_samples", lb_samples),
      {"bench_eps_grid",
       [](ExperimentConfig& c, const std::string& v) {
         c.bench_eps_grid = parse_list<double>("bench_eps_grid", v, parse_real);
       },
       [](const ExperimentConfig& c) { return join(c.bench_eps_grid); }},
      {"bench_n_grid",
       [](ExperimentConfig& c, const std::string& v) {
         c.bench_n_grid = parse_list<std::size_t>("bench_n_grid", v, parse_number<std::size_t>);
       },
       [](const ExperimentConfig& c) { return join(c.bench_n_grid); }},
      CORRL_REAL("bench_attack_magnitude", bench_attack_magnitude),
      CORRL_REAL("bench_noise", bench_noise),
      CORRL_INT("bench_dim", bench_dim),
  };
  return table;
}

#undef CORRL_INT
#undef CORRL_SIZE
#undef CORRL_REAL
#undef CORRL_STR
#undef CORRL_BOOL
#undef CORRL_OPT_REAL

const KeySpec& find_key(const std::string& key) {
  for (const auto& k : key_table()) {
    if (k.name == key) return k;
  }
  throw ConfigError("unknown config key: " + key);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.push_back(k.name);
    return out;
  }();
  return keys;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  find_key(key).set(cfg, value);
}

std::string get_config_value(const ExperimentConfig& cfg, const std::string& key) { return find_key(key).get(cfg); }

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
    set_config_value(base, trim(line.substr(0, eq)), line.substr(eq + 1));
  }
  return base;
}

std::string config_to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& k : key_table()) out += k.name + "=" + k.get(cfg) + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  if (!seed) throw ConfigError("seed is required");
  if (trials < 1) throw ConfigError("trials must be positive");
  if (jobs < 1) throw ConfigError("jobs must be positive");
  if (!(epsilon >= 0.0 && epsilon < 0.5)) throw ConfigError("epsilon must lie in [0, 1/2)");
  if (!(oracle_eps() >= 0.0 && oracle_eps() < 0.5)) throw ConfigError("oracle_epsilon must lie in [0, 1/2)");
  if (bonus_epsilon && !(*bonus_epsilon >= 0.0)) throw ConfigError("bonus_epsilon must be nonnegative");
  const std::vector<std::string> instances{"demo-chain", "random-tabular", "random-simplex", "file"};
  if (std::find(instances.begin(), instances.end(), instance) == instances.end()) {
    throw ConfigError("unknown instance: " + instance);
  }
  if (instance == "file" && mdp_path.empty()) throw ConfigError("instance=file needs mdp_path");
  if (nu != "uniform" && nu != "no-coverage" && nu != "file") throw ConfigError("unknown nu: " + nu);
  if (nu == "file" && nu_path.empty()) throw ConfigError("nu=file needs nu_path");
  if (comparator != "optimal" && comparator != "file") throw ConfigError("unknown comparator: " + comparator);
  if (comparator == "file" && comparator_path.empty()) throw ConfigError("comparator=file needs comparator_path");
  if (attack != "none" && attack != "value-poison" && attack != "random" && attack != "concentrated") {
    throw ConfigError("unknown attack: " + attack);
  }
  if (n_grid.empty() || std::find(n_grid.begin(), n_grid.end(), std::size_t{0}) != n_grid.end()) {
    throw ConfigError("n_grid entries must be positive");
  }
  try {
    parse_bandit_learner(bandit_learner);
    sweep.check();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
}

// ---------------------------------------------------------------------------

Environment build_environment(const ExperimentConfig& cfg) {
  Environment env;
  if (cfg.instance == "demo-chain") {
    env.mdp = demo_chain_mdp(cfg.sigma);
  } else if (cfg.instance == "random-tabular") {
    env.mdp = random_tabular_mdp(cfg.num_states, cfg.num_actions, cfg.horizon, cfg.sigma, cfg.instance_seed);
  } else if (cfg.instance == "random-simplex") {
    env.mdp = random_simplex_mdp(cfg.num_states, cfg.num_actions, cfg.dim, cfg.horizon, cfg.sigma, cfg.instance_seed);
  } else if (cfg.instance == "file") {
    env.mdp = mdp_from_text(read_file(cfg.mdp_path));
  } else {
    throw ConfigError("unknown instance: " + cfg.instance);
  }
  const auto problems = validate_mdp(env.mdp);
  if (!problems.empty()) throw ConfigError("invalid MDP: " + problems.front());

  const int S = env.mdp.num_states, A = env.mdp.num_actions;
  if (cfg.nu == "uniform") {
    env.nu = OfflineDistribution::uniform(S * A);
  } else if (cfg.nu == "no-coverage") {
    if (cfg.drop_state < 0 || cfg.drop_state >= S || cfg.drop_action < 0 || cfg.drop_action >= A) {
      throw ConfigError("drop pair out of range");
    }
    if (S * A < 2) throw ConfigError("no-coverage needs at least two pairs");
    env.nu.probs = Eigen::VectorXd::Constant(S * A, 1.0 / (S * A - 1));
    env.nu.probs(cfg.drop_state * A + cfg.drop_action) = 0.0;
  } else {
    env.nu = distribution_from_csv(read_file(cfg.nu_path), S, A);
  }

  env.optimal = exact_optimal(env.mdp).policy;
  if (cfg.comparator == "file") {
    env.comparator = policy_from_csv(read_file(cfg.comparator_path));
    try {
      env.comparator.check(env.mdp);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("comparator: ") + e.what());
    }
  } else {
    env.comparator = env.optimal;
  }
  return env;
}

TrialRecord run_trial(const ExperimentConfig& cfg, const Environment& env, std::size_t n, int trial) {
  const auto start = std::chrono::steady_clock::now();
  TrialRecord rec;
  rec.n = n;
  rec.trial = trial;
  rec.seed = derive_seed(cfg.seed.value_or(0), static_cast<std::uint64_t>(trial));
  try {
    const LinearMdp& mdp = env.mdp;
    const Dataset clean = collect_clean(mdp, env.nu, n, derive_seed(rec.seed, 0));
    Dataset data = clean;
    const StateAction target{cfg.attack_state, cfg.attack_action};
    if (cfg.epsilon > 0.0 && cfg.attack != "none") {
      if (cfg.attack == "value-poison") {
        data = apply_attack(clean, value_poison_attack(mdp, clean, cfg.epsilon, target, cfg.attack_magnitude));
      } else if (cfg.attack == "random") {
        data = apply_attack(clean, random_corruption(clean, cfg.epsilon, mdp.num_states, derive_seed(rec.seed, 2)));
      } else if (cfg.attack == "concentrated") {
        const AttackResult r = concentrated_reward_attack(clean, cfg.epsilon, target);
        // An attack that does not fit the budget is simply not mounted.
        if (const auto* plan = std::get_if<AttackPlan>(&r)) data = apply_attack(clean, *plan);
      }
    }
    rec.corrupted = data.corrupted_count();

    BonusConfig bonus = cfg.bonus;
    bonus.epsilon = cfg.bonus_epsilon.value_or(cfg.epsilon);
    bonus.sigma = mdp.noise_sigma;
    bonus.rho = cfg.bonus_rho.value_or(mdp.param_bound);
    const RlsviRun run =
        run_rlsvi(data.view(), FeatureMap::of(mdp), mdp.horizon, cfg.oracle, cfg.oracle_eps(), bonus,
                  derive_seed(rec.seed, 1));
    rec.subopt_optimal = suboptimality(mdp, run.policy, env.optimal);
    rec.subopt_comparator = suboptimality(mdp, run.policy, env.comparator);
    rec.validity_margin = bellman_validity_margin(mdp, run);
    rec.pessimism_bound = pessimism_bound(mdp, run, env.comparator);
    double total = 0.0;
    for (const auto& g : run.gamma) total += g.mean();
    rec.mean_bonus = total / static_cast<double>(run.gamma.size());
  } catch (const std::exception& e) {
    rec.ok = false;
    rec.error = e.what();
  }
  rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

Quantiles summarize(const std::vector<double>& values) {
  return {quantile(values, 0.5), quantile(values, 0.05), quantile(values, 0.95)};
}

double kappa_report(const LinearMdp& mdp, const OfflineDistribution& nu, const PolicyTable& comparator) {
  return relative_condition_number(covariance(mdp, occupancy(mdp, comparator)), covariance(mdp, nu));
}

std::string trials_csv(const std::vector<TrialRecord>& records) {
  std::ostringstream os;
  os << "n,trial,seed,status,corrupted,subopt_optimal,subopt_comparator,validity_margin,pessimism_bound,mean_bonus\n";
  for (const auto& r : records) {
    os << r.n << ',' << r.trial << ',' << r.seed << ',' << (r.ok ? "ok" : "failed") << ',' << r.corrupted << ','
       << format_real(r.subopt_optimal) << ',' << format_real(r.subopt_comparator) << ','
       << format_real(r.validity_margin) << ',' << format_real(r.pessimism_bound) << ','
       << format_real(r.mean_bonus) << '\n';
  }
  return os.str();
}

namespace {

json quantiles_json(const std::vector<double>& v) {
  if (v.empty()) return nullptr;
  const Quantiles q = summarize(v);
  return json{{"median", q.median}, {"p5", q.p5}, {"p95", q.p95}};
}

json real_json(double x) {
  if (std::isfinite(x)) return x;
  return format_real(x);
}

/// Runs `count` independent tasks on up to `jobs` threads; task i writes its
/// own slot, so the merged order never depends on scheduling.
void parallel_for(std::size_t count, int jobs, const std::function<void(std::size_t)>& task) {
  const auto workers = static_cast<std::size_t>(std::max(1, jobs));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) task(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) task(i);
    });
  }
  for (auto& t : pool) t.join();
}

ResultBundle run_rlsvi_experiment(const ExperimentConfig& cfg) {
  ResultBundle bundle;
  const Environment env = build_environment(cfg);
  const std::size_t per_n = static_cast<std::size_t>(cfg.trials);
  std::vector<TrialRecord> records(cfg.n_grid.size() * per_n);
  parallel_for(records.size(), cfg.jobs, [&](std::size_t i) {
    records[i] = run_trial(cfg, env, cfg.n_grid[i / per_n], static_cast<int>(i % per_n));
  });

  json summary;
  summary["experiment"] = to_string(cfg.experiment);
  summary["kappa"] = real_json(kappa_report(env.mdp, env.nu, env.comparator));
  summary["comparator_value"] = initial_value(env.mdp, env.comparator);
  summary["optimal_value"] = initial_value(env.mdp, env.optimal);
  json per_n_json = json::array();
  for (std::size_t g = 0; g < cfg.n_grid.size(); ++g) {
    std::vector<double> so, sc;
    std::size_t failures = 0, valid = 0, pess = 0;
    for (std::size_t t = 0; t < per_n; ++t) {
      const TrialRecord& r = records[g * per_n + t];
      if (!r.ok) {
        ++failures;
        continue;
      }
      so.push_back(r.subopt_optimal);
      sc.push_back(r.subopt_comparator);
      if (r.validity_margin <= 0.0) ++valid;
      if (r.subopt_comparator <= r.pessimism_bound) ++pess;
    }
    bundle.failures += failures;
    const double ok = static_cast<double>(so.size());
    per_n_json.push_back({{"n", cfg.n_grid[g]},
                          {"trials", per_n},
                          {"failures", failures},
                          {"subopt_optimal", quantiles_json(so)},
                          {"subopt_comparator", quantiles_json(sc)},
                          {"bonus_valid_fraction", ok > 0 ? valid / ok : 0.0},
                          {"pessimism_holds_fraction", ok > 0 ? pess / ok : 0.0}});
  }
  summary["per_n"] = per_n_json;
  json errors = json::array();
  for (const auto& r : records) {
    if (!r.ok) errors.push_back({{"n", r.n}, {"trial", r.trial}, {"error", r.error}});
  }
  summary["errors"] = errors;
  bundle.files.emplace_back("trials.csv", trials_csv(records));
  bundle.files.emplace_back("summary.json", summary.dump(2) + "\n");
  bundle.records = std::move(records);
  return bundle;
}

ResultBundle run_sweep_experiment(const ExperimentConfig& cfg) {
  SweepConfig sweep = cfg.sweep;
  sweep.seed = *cfg.seed;
  if (cfg.paper_scale) sweep.paper_scale();
  const auto rows = run_bonus_sweep(sweep);
  ResultBundle bundle;
  bundle.files.emplace_back("sweep.csv", sweep_csv(rows));
  bundle.files.emplace_back("sweep.svg", sweep_svg(rows));
  return bundle;
}

json minimax_json(const MinimaxReport& m) {
  return {{"v_star_m", m.v_star_m},
          {"v_star_mprime", m.v_star_mprime},
          {"min_simultaneous_regret", m.min_simultaneous_regret},
          {"bound", m.bound},
          {"exhaustive", m.exhaustive},
          {"policies_evaluated", m.policies_evaluated},
          {"holds", m.holds}};
}

json frequency_json(const FrequencyEstimate& f) {
  return {{"successes", f.successes},
          {"trials", f.trials},
          {"frequency", f.frequency()},
          {"std_error", f.std_error()},
          {"radius_3sigma", 3.0 * f.std_error()}};
}

ResultBundle run_tree_experiment(const ExperimentConfig& cfg) {
  const int S = cfg.tree_states, A = cfg.tree_actions;
  TreeInstancePair pair;
  try {
    pair = build_tree_pair(S, A, cfg.tree_horizon, cfg.epsilon,
                           tree_distribution(S, A, default_tree_probe(S, A), cfg.tree_down_weight));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const MinimaxReport mm = verify_minimax_gap(pair);
  const FrequencyEstimate freq =
      simulate_indistinguishability(pair, cfg.lb_samples, static_cast<std::size_t>(cfg.trials), *cfg.seed);
  json summary{{"experiment", "lower-bound-tree"},
               {"depth", pair.depth},
               {"star", {pair.star.state, pair.star.action}},
               {"probe", {pair.probe.state, pair.probe.action}},
               {"probe_mass", pair.nu.probs(pair.probe.state * A + pair.probe.action)},
               {"minimax", minimax_json(mm)},
               {"indistinguishability", frequency_json(freq)}};
  ResultBundle bundle;
  bundle.files.emplace_back("tree_m.mdp", mdp_to_text(pair.mdp_m));
  bundle.files.emplace_back("tree_mprime.mdp", mdp_to_text(pair.mdp_mprime));
  bundle.files.emplace_back("tree_summary.json", summary.dump(2) + "\n");
  if (!mm.holds) bundle.failures = 1;
  return bundle;
}

ResultBundle run_bandit_experiment(const ExperimentConfig& cfg) {
  BanditInstancePair pair;
  try {
    pair = build_bandit_pair(cfg.bandit_p, cfg.epsilon);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  const auto trials = static_cast<std::size_t>(cfg.trials);
  const CouplingReport coupling = simulate_coupling(pair, cfg.lb_samples, trials, *cfg.seed);
  const double pvalue = binomial_gof_pvalue(coupling.mismatch_counts, coupling.arm1_counts, pair.epsilon / pair.p,
                                            derive_seed(*cfg.seed, 1));
  const TradeoffReport tradeoff = agnostic_tradeoff_experiment(pair, parse_bandit_learner(cfg.bandit_learner),
                                                               cfg.lb_samples, trials, derive_seed(*cfg.seed, 2));
  json summary{{"experiment", "lower-bound-bandit"},
               {"p", pair.p},
               {"epsilon", pair.epsilon},
               {"arm1_mean_instance1", pair.arm1_mean1()},
               {"arm1_mean_instance2", pair.arm1_mean2()},
               {"kappa_instance1", pair.kappa1},
               {"kappa_instance2", pair.kappa2},
               {"collision", frequency_json(coupling.collisions)},
               {"mismatch_gof_pvalue", pvalue},
               {"mean_reward_x", coupling.mean_x},
               {"mean_reward_y", coupling.mean_y},
               {"coupling_monotone", coupling.monotone},
               {"learner", cfg.bandit_learner},
               {"tradeoff",
                {{"collisions", tradeoff.collisions},
                 {"mean_clean_subopt", tradeoff.mean_clean_subopt},
                 {"mean_corrupt_subopt", tradeoff.mean_corrupt_subopt},
                 {"mean_clean_subopt_on_collision", tradeoff.mean_clean_subopt_on_collision},
                 {"mean_corrupt_subopt_on_collision", tradeoff.mean_corrupt_subopt_on_collision}}}};
  ResultBundle bundle;
  bundle.files.emplace_back("tradeoff.csv", tradeoff_csv(tradeoff));
  bundle.files.emplace_back("bandit_summary.json", summary.dump(2) + "\n");
  return bundle;
}

ResultBundle run_oracle_bench(const ExperimentConfig& cfg) {
  RegressionDesign design;
  design.dim = cfg.bench_dim;
  design.w_star = Eigen::VectorXd::Constant(cfg.bench_dim, 1.0 / std::sqrt(static_cast<double>(cfg.bench_dim)));
  design.noise_sigma = cfg.bench_noise;
  design.attack = cfg.bench_attack_magnitude > 0.0 ? DesignAttack::shift : DesignAttack::none;
  design.attack_magnitude = cfg.bench_attack_magnitude;
  const auto param = check_oracle_bound_param(cfg.oracle, design, cfg.bench_eps_grid, cfg.bench_n_grid, cfg.trials,
                                              *cfg.seed, cfg.bonus.constants);
  const auto pred = check_oracle_bound_pred(cfg.oracle, design, cfg.bench_eps_grid, cfg.bench_n_grid, cfg.trials,
                                            derive_seed(*cfg.seed, 1), cfg.bonus.constants);
  auto violations = [](const std::vector<BoundCell>& cells) {
    return static_cast<std::size_t>(std::count_if(cells.begin(), cells.end(), [](const BoundCell& c) { return c.violation; }));
  };
  json summary{{"experiment", "oracle-bench"},
               {"estimator", to_string(cfg.oracle.kind)},
               {"cells", param.size()},
               {"param_violations", violations(param)},
               {"pred_violations", violations(pred)}};
  ResultBundle bundle;
  bundle.files.emplace_back("oracle_param.csv", bound_report_csv(param));
  bundle.files.emplace_back("oracle_pred.csv", bound_report_csv(pred));
  bundle.files.emplace_back("oracle_summary.json", summary.dump(2) + "\n");
  return bundle;
}

ResultBundle run_kappa_experiment(const ExperimentConfig& cfg) {
  const Environment env = build_environment(cfg);
  const double kappa = kappa_report(env.mdp, env.nu, env.comparator);
  json summary{{"experiment", "kappa"}, {"kappa", real_json(kappa)}};
  ResultBundle bundle;
  bundle.files.emplace_back("kappa.json", summary.dump(2) + "\n");
  return bundle;
}

}  // namespace

ResultBundle run_experiment(const ExperimentConfig& cfg_in) {
  cfg_in.validate();
  ExperimentConfig cfg = cfg_in;
  if (cfg.paper_scale) cfg.sweep.paper_scale();
  ResultBundle bundle;
  switch (cfg.experiment) {
    case ExperimentKind::coverage:
    case ExperimentKind::no_coverage: bundle = run_rlsvi_experiment(cfg); break;
    case ExperimentKind::bonus_sweep: bundle = run_sweep_experiment(cfg); break;
    case ExperimentKind::lower_bound_tree: bundle = run_tree_experiment(cfg); break;
    case ExperimentKind::lower_bound_bandit: bundle = run_bandit_experiment(cfg); break;
    case ExperimentKind::oracle_bench: bundle = run_oracle_bench(cfg); break;
    case ExperimentKind::kappa: bundle = run_kappa_experiment(cfg); break;
  }
  bundle.config_echo = config_to_text(cfg);
  return bundle;
}

std::string emit_results(const ResultBundle& bundle, const std::filesystem::path& out_dir) {
  json manifest = json::array();
  auto put = [&](const std::string& name, const std::string& content) {
    write_file(out_dir / name, content);
    manifest.push_back({{"path", name}, {"sha256", sha256_hex(content)}, {"bytes", content.size()}});
  };
  put("config.txt", bundle.config_echo);
  for (const auto& [name, content] : bundle.files) put(name, content);
  const std::string text = manifest.dump(2) + "\n";
  write_file(out_dir / "manifest.json", text);
  return text;
}

}  // namespace corrl
