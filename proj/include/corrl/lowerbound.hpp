#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "corrl/dataset.hpp"
#include "corrl/mdp.hpp"
#include "corrl/oracle.hpp"

namespace corrl {

/// Success count over Bernoulli trials, with the binomial standard error.
struct FrequencyEstimate {
  std::size_t successes = 0;
  std::size_t trials = 0;

  double frequency() const { return trials ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0; }
  double std_error() const;
};

// ---------------------------------------------------------------------------
// Tree construction.

/// Two tabular MDPs on the same deterministic tree with self-loops.
///
/// States are numbered breadth-first: the children of state j are
/// (A/2) j + 1 + c for c in [0, A/2), where they exist. Action c < A/2 moves to
/// child c (or stays when that child does not exist), every other action is a
/// self-loop, and leaves are absorbing. Rewards are Bernoulli: SA eps/2 at
/// star in both MDPs, SA eps at probe in mdp_mprime only, 0 elsewhere.
struct TreeInstancePair {
  LinearMdp mdp_m;
  LinearMdp mdp_mprime;
  StateAction star;
  StateAction probe;
  OfflineDistribution nu;
  double epsilon = 0.0;
  int depth = 0;  // number of tree levels
};

/// ceil(log_{A/2}(S (A/2 - 1) + 1)), computed in integers.
int tree_depth(int num_states, int num_actions);

/// Uniform over all pairs except `probe`, which gets `down_weight` times the
/// common mass.
OfflineDistribution tree_distribution(int num_states, int num_actions, StateAction probe, double down_weight = 0.5);

/// Default probe: the last self-loop action at the root, or the one before it
/// when the root is also the reward leaf (S = 1).
StateAction default_tree_probe(int num_states, int num_actions);

/// Builds the pair. `nu` defaults to tree_distribution with the default probe;
/// the probe is argmin nu (lowest index on ties). Throws std::invalid_argument
/// naming the failed constraint: A > 2 and even, S <= (A/2)^(H/2),
/// SA eps <= 1, or probe == star.
TreeInstancePair build_tree_pair(int num_states, int num_actions, int horizon, double epsilon,
                                 const std::optional<OfflineDistribution>& nu = std::nullopt);

struct MinimaxReport {
  double v_star_m = 0.0;
  double v_star_mprime = 0.0;
  /// min over deterministic policies of max(SubOpt in M, SubOpt in M').
  double min_simultaneous_regret = 0.0;
  /// (H - depth) SA eps / 4.
  double bound = 0.0;
  bool exhaustive = true;
  std::size_t policies_evaluated = 0;
  bool holds = false;
};

/// Exact values of both MDPs and the simultaneous regret. Enumerates
/// deterministic policies on reachable (h, s) only, up to `max_policies`;
/// beyond that it falls back to the two optimal policies (exhaustive = false).
MinimaxReport verify_minimax_gap(const TreeInstancePair& pair, std::size_t max_policies = 1000000);

/// Per trial: clean data from M' under nu, then the informed concentrated
/// reward attack on the probe. Success when the attack fits in the budget.
FrequencyEstimate simulate_indistinguishability(const TreeInstancePair& pair, std::size_t n, std::size_t trials,
                                                std::uint64_t seed);

// ---------------------------------------------------------------------------
// Two-armed bandit coupling.

/// Arms a1 = 0 and a2 = 1, sampled with probabilities p and 1 - p. Instance 1
/// has arm-1 mean 1/2 + eps/(2p); instance 2 has 1/2 - eps/(2p); arm 2 has
/// mean 1/2 in both.
struct BanditInstancePair {
  double p = 0.0;
  double epsilon = 0.0;
  LinearMdp instance1;  // one state, two actions, H = 1, Bernoulli rewards
  LinearMdp instance2;
  OfflineDistribution nu;
  double kappa1 = 0.0;  // 1/p
  double kappa2 = 0.0;  // 1/(1-p)

  double arm1_mean1() const { return 0.5 + epsilon / (2.0 * p); }
  double arm1_mean2() const { return 0.5 - epsilon / (2.0 * p); }
};

/// Throws std::invalid_argument unless 0 < eps <= p <= 1/2.
BanditInstancePair build_bandit_pair(double p, double epsilon);

/// One coupled draw. Arms and arm-2 rewards are shared; on arm 1 a common
/// uniform U gives X = [U > 1/2 + eps/2p] (instance 2) and
/// Y = [U > 1/2 - eps/2p] (instance 1), so Y >= X.
struct CoupledDraw {
  Dataset instance1;
  Dataset instance2;
  std::vector<std::size_t> mismatches;  // indices with X != Y, ascending
  std::size_t arm1_count = 0;
  /// mismatches <= floor(eps N) and N(a1) <= pN.
  bool collision = false;
};

CoupledDraw coupled_datasets(const BanditInstancePair& pair, std::size_t n, std::uint64_t seed);

/// Instance-2 data after flipping the mismatched (a1, 0) tuples to (a1, 1),
/// within budget. On collision trials the result equals instance1 exactly.
Dataset attack_coupled(const BanditInstancePair& pair, const CoupledDraw& draw);

struct CouplingReport {
  FrequencyEstimate collisions;
  std::vector<std::size_t> mismatch_counts;  // per trial
  std::vector<std::size_t> arm1_counts;      // per trial
  double mean_x = 0.0;                       // pooled arm-1 reward mean, instance 2
  double mean_y = 0.0;                       // pooled arm-1 reward mean, instance 1
  bool monotone = true;                      // Y >= X on every arm-1 draw
};

CouplingReport simulate_coupling(const BanditInstancePair& pair, std::size_t n, std::size_t trials,
                                 std::uint64_t seed);

/// p-value of a chi-squared test that counts[i] ~ Binomial(sizes[i], q)
/// independently, via the randomized probability integral transform binned
/// into `bins` equal cells.
double binomial_gof_pvalue(const std::vector<std::size_t>& counts, const std::vector<std::size_t>& sizes, double q,
                           std::uint64_t seed, int bins = 10);

enum class BanditLearner { always_a2, empirical_argmax, rlsvi_none, rlsvi_paper };

std::string to_string(BanditLearner learner);
BanditLearner parse_bandit_learner(const std::string& name);

/// Arm chosen by `learner` on a bandit dataset. The R-LSVI learners use the
/// trimmed oracle at contamination level `assumed_epsilon`.
int choose_arm(BanditLearner learner, const Dataset& data, double assumed_epsilon, std::uint64_t seed);

struct TradeoffRow {
  std::size_t trial = 0;
  bool collision = false;
  double clean_subopt = 0.0;    // instance 1, learner on coupled clean data
  double corrupt_subopt = 0.0;  // instance 2, learner on attacked data
};

struct TradeoffReport {
  std::vector<TradeoffRow> rows;
  std::size_t collisions = 0;
  double mean_clean_subopt = 0.0;
  double mean_corrupt_subopt = 0.0;
  double mean_corrupt_subopt_on_collision = 0.0;
  double mean_clean_subopt_on_collision = 0.0;
};

TradeoffReport agnostic_tradeoff_experiment(const BanditInstancePair& pair, BanditLearner learner, std::size_t n,
                                            std::size_t trials, std::uint64_t seed);

/// CSV with header trial,collision,clean_subopt,corrupt_subopt.
std::string tradeoff_csv(const TradeoffReport& report);

}  // namespace corrl
