#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "corrl/adversary.hpp"
#include "corrl/harness.hpp"
#include "corrl/instances.hpp"
#include "corrl/io.hpp"
#include "corrl/rlsvi.hpp"

using namespace corrl;

namespace {

constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> trials;
  std::optional<int> jobs;
  bool paper_scale = false;
  std::vector<std::string> sets;  // key=value overrides
};

/// Config file, then --set overrides, then the dedicated global flags.
ExperimentConfig resolve_config(const Globals& g, ExperimentKind kind, const std::vector<std::string>& extra = {}) {
  ExperimentConfig cfg;
  if (!g.config_path.empty()) cfg = parse_config(read_file(g.config_path));
  cfg.experiment = kind;
  std::vector<std::string> sets = g.sets;
  sets.insert(sets.end(), extra.begin(), extra.end());
  for (const auto& kv : sets) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    set_config_value(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.experiment = kind;
  if (g.seed) cfg.seed = *g.seed;
  if (!g.out.empty()) cfg.out = g.out;
  if (g.trials) cfg.trials = *g.trials;
  if (g.jobs) cfg.jobs = *g.jobs;
  if (g.paper_scale) cfg.paper_scale = true;
  return cfg;
}

int run_and_emit(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const ResultBundle bundle = run_experiment(cfg);
  emit_results(bundle, cfg.out);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::cout << to_string(cfg.experiment) << ": wrote " << bundle.files.size() + 2 << " files to " << cfg.out << " ("
            << secs << " s)\n";
  for (const auto& [name, content] : bundle.files) {
    if (name.size() > 5 && name.substr(name.size() - 5) == ".json") std::cout << content;
  }
  if (bundle.failures > 0) {
    std::cerr << bundle.failures << " trial(s) failed\n";
    return kExitRuntime;
  }
  return 0;
}

LinearMdp instance_by_name(const std::string& name, int S, int A, int d, int H, double sigma, std::uint64_t seed) {
  if (name == "demo-chain") return demo_chain_mdp(sigma);
  if (name == "random-tabular") return random_tabular_mdp(S, A, H, sigma, seed);
  if (name == "random-simplex") return random_simplex_mdp(S, A, d, H, sigma, seed);
  throw ConfigError("unknown instance: " + name);
}

void emit(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
  } else {
    write_file(path, content);
  }
}

std::pair<int, int> parse_pair(const std::string& text) {
  const auto comma = text.find(',');
  if (comma == std::string::npos) throw ConfigError("expected s,a but got '" + text + "'");
  try {
    return {std::stoi(text.substr(0, comma)), std::stoi(text.substr(comma + 1))};
  } catch (const std::exception&) {
    throw ConfigError("expected s,a but got '" + text + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Corruption-robust offline RL experiments for linear MDPs"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config_path, "key=value experiment config file");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--out", g.out, "output directory (experiments) or file");
  app.add_option("--trials", g.trials, "number of trials");
  app.add_option("--jobs", g.jobs, "concurrent trials");
  app.add_flag("--paper-scale", g.paper_scale, "use the full-size bonus sweep (N = 1e6)");
  app.add_option("--set", g.sets, "config override key=value (repeatable)");

  // gen-mdp
  auto* gen = app.add_subcommand("gen-mdp", "write an MDP file");
  std::string gen_instance = "demo-chain";
  int gen_S = 3, gen_A = 2, gen_d = 3, gen_H = 2;
  double gen_sigma = 0.5;
  std::uint64_t gen_seed = 1;
  gen->add_option("--instance", gen_instance, "demo-chain | random-tabular | random-simplex");
  gen->add_option("--S", gen_S);
  gen->add_option("--A", gen_A);
  gen->add_option("--d", gen_d);
  gen->add_option("--H", gen_H);
  gen->add_option("--sigma", gen_sigma);
  gen->add_option("--instance-seed", gen_seed);

  // collect
  auto* collect = app.add_subcommand("collect", "draw a clean offline dataset");
  std::string col_mdp, col_nu;
  std::size_t col_n = 1000;
  collect->add_option("--mdp", col_mdp, "MDP file")->required();
  collect->add_option("--nu", col_nu, "distribution CSV (default uniform)");
  collect->add_option("--n", col_n, "number of tuples");

  // attack
  auto* attack = app.add_subcommand("attack", "corrupt a dataset");
  std::string att_mdp, att_data, att_kind = "value-poison", att_target = "0,1", att_plan;
  double att_eps = 0.05, att_mag = 1.0;
  attack->add_option("--mdp", att_mdp, "MDP file")->required();
  attack->add_option("--data", att_data, "dataset CSV")->required();
  attack->add_option("--epsilon", att_eps);
  attack->add_option("--attack", att_kind, "value-poison | random | concentrated");
  attack->add_option("--magnitude", att_mag);
  attack->add_option("--target", att_target, "target pair s,a");
  attack->add_option("--plan-out", att_plan, "where to write the plan CSV");

  // rlsvi
  auto* rlsvi = app.add_subcommand("rlsvi", "run robust LSVI on a dataset");
  std::string rl_mdp, rl_data, rl_oracle = "trimmed", rl_bonus = "none", rl_json;
  double rl_eps = 0.0;
  std::optional<double> rl_oracle_eps;
  rlsvi->add_option("--mdp", rl_mdp, "MDP file (features; true model for evaluation)")->required();
  rlsvi->add_option("--data", rl_data, "dataset CSV")->required();
  rlsvi->add_option("--oracle", rl_oracle, "ols | trimmed | huber");
  rlsvi->add_option("--epsilon", rl_eps, "assumed contamination level");
  rlsvi->add_option("--oracle-epsilon", rl_oracle_eps, "trimming level (default --epsilon)");
  rlsvi->add_option("--bonus", rl_bonus, "none | paper | lykouris");
  rlsvi->add_option("--meta-out", rl_json, "where to write the JSON metadata");

  // experiment-style subcommands
  auto* experiment = app.add_subcommand("experiment", "run a configured experiment");
  std::string exp_name;
  experiment->add_option("name", exp_name, "experiment name (default: from config)");

  auto* sweep = app.add_subcommand("bonus-sweep", "bonus size simulation");
  auto* lower = app.add_subcommand("lower-bound", "hardness constructions");
  lower->require_subcommand(1);
  auto* lower_tree = lower->add_subcommand("tree", "tree MDP pair");
  auto* lower_bandit = lower->add_subcommand("bandit", "two-armed bandit coupling");
  auto* bench = app.add_subcommand("oracle-bench", "robust regression error contract");
  auto* kappa = app.add_subcommand("kappa", "relative condition number");
  std::string kap_mdp, kap_nu, kap_cmp;
  kappa->add_option("--mdp", kap_mdp, "MDP file");
  kappa->add_option("--nu", kap_nu, "distribution CSV");
  kappa->add_option("--comparator", kap_cmp, "policy CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*gen) {
      emit(g.out, mdp_to_text(instance_by_name(gen_instance, gen_S, gen_A, gen_d, gen_H, gen_sigma, gen_seed)));
      return 0;
    }
    if (*collect) {
      if (!g.seed) throw ConfigError("--seed is required");
      const LinearMdp mdp = mdp_from_text(read_file(col_mdp));
      const OfflineDistribution nu = col_nu.empty() ? OfflineDistribution::uniform(mdp.num_pairs())
                                                    : distribution_from_csv(read_file(col_nu), mdp.num_states,
                                                                            mdp.num_actions);
      emit(g.out, dataset_to_csv(collect_clean(mdp, nu, col_n, *g.seed)));
      return 0;
    }
    if (*attack) {
      const LinearMdp mdp = mdp_from_text(read_file(att_mdp));
      const Dataset clean = dataset_from_csv(read_file(att_data));
      const auto [ts, ta] = parse_pair(att_target);
      AttackPlan plan;
      if (att_kind == "value-poison") {
        plan = value_poison_attack(mdp, clean, att_eps, {ts, ta}, att_mag);
      } else if (att_kind == "random") {
        if (!g.seed) throw ConfigError("--seed is required for the random attack");
        plan = random_corruption(clean, att_eps, mdp.num_states, *g.seed);
      } else if (att_kind == "concentrated") {
        const AttackResult r = concentrated_reward_attack(clean, att_eps, {ts, ta});
        if (const auto* f = std::get_if<AttackFailure>(&r)) {
          std::cerr << "attack failed: " << f->reason << '\n';
          return kExitRuntime;
        }
        plan = std::get<AttackPlan>(r);
      } else {
        throw ConfigError("unknown attack: " + att_kind);
      }
      if (!att_plan.empty()) write_file(att_plan, plan_to_csv(plan));
      emit(g.out, dataset_to_csv(apply_attack(clean, plan)));
      return 0;
    }
    if (*rlsvi) {
      if (!g.seed) throw ConfigError("--seed is required");
      const LinearMdp mdp = mdp_from_text(read_file(rl_mdp));
      const Dataset data = dataset_from_csv(read_file(rl_data));
      OracleSettings oracle;
      BonusConfig bonus;
      try {
        oracle.kind = parse_estimator(rl_oracle);
        bonus.mode = parse_bonus_mode(rl_bonus);
      } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
      }
      bonus.epsilon = rl_eps;
      bonus.sigma = mdp.noise_sigma;
      bonus.rho = mdp.param_bound;
      const RlsviRun run = run_rlsvi(data.view(), FeatureMap::of(mdp), mdp.horizon, oracle,
                                     rl_oracle_eps.value_or(rl_eps), bonus, *g.seed);
      const PolicyTable opt = exact_optimal(mdp).policy;
      nlohmann::ordered_json meta{{"n_total", run.n_total},
                                  {"n_per_fold", run.n_total / static_cast<std::size_t>(mdp.horizon)},
                                  {"dropped", run.dropped},
                                  {"lambda", run.lambda},
                                  {"v_hat_initial", mdp.init_dist.dot(run.v_hat.row(0).transpose())},
                                  {"subopt_optimal", suboptimality(mdp, run.policy, opt)},
                                  {"bellman_validity_margin", bellman_validity_margin(mdp, run)}};
      nlohmann::ordered_json folds = nlohmann::ordered_json::array();
      for (std::size_t h = 0; h < run.folds.size(); ++h) {
        folds.push_back({{"h", h + 1},
                         {"size", run.folds[h].size},
                         {"iterations", run.folds[h].iterations},
                         {"converged", run.folds[h].converged},
                         {"trimmed", run.folds[h].trimmed},
                         {"bonus_mean", run.bonus_stats[h].mean},
                         {"bonus_max", run.bonus_stats[h].max}});
      }
      meta["folds"] = folds;
      meta["policy"] = policy_to_csv(run.policy);
      const std::string meta_text = meta.dump(2) + "\n";
      if (rl_json.empty()) {
        std::cerr << meta_text;
      } else {
        write_file(rl_json, meta_text);
      }
      emit(g.out, value_dump_csv(run));
      return 0;
    }

    std::optional<ExperimentKind> kind;
    std::vector<std::string> extra;
    if (*experiment) {
      if (!exp_name.empty()) {
        kind = parse_experiment(exp_name);
      } else {
        ExperimentConfig base;
        if (!g.config_path.empty()) base = parse_config(read_file(g.config_path));
        kind = base.experiment;
      }
    } else if (*sweep) {
      kind = ExperimentKind::bonus_sweep;
    } else if (*lower_tree) {
      kind = ExperimentKind::lower_bound_tree;
    } else if (*lower_bandit) {
      kind = ExperimentKind::lower_bound_bandit;
    } else if (*bench) {
      kind = ExperimentKind::oracle_bench;
    } else if (*kappa) {
      kind = ExperimentKind::kappa;
      if (!kap_mdp.empty()) extra.insert(extra.end(), {"instance=file", "mdp_path=" + kap_mdp});
      if (!kap_nu.empty()) extra.insert(extra.end(), {"nu=file", "nu_path=" + kap_nu});
      if (!kap_cmp.empty()) extra.insert(extra.end(), {"comparator=file", "comparator_path=" + kap_cmp});
    }
    if (!kind) throw ConfigError("no subcommand");
    return run_and_emit(resolve_config(g, *kind, extra));
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
