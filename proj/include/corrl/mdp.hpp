#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "corrl/dataset.hpp"
#include "corrl/rng.hpp"

namespace corrl {

enum class RewardNoise { gaussian, uniform, bernoulli };

std::string to_string(RewardNoise noise);
RewardNoise parse_reward_noise(const std::string& name);

/// Finite linear MDP. State-action pairs are flattened as s * A + a.
///
/// P(s'|s,a) = features.row(s*A+a) . measures.row(s'), and the mean reward is
/// features.row(s*A+a) . reward_param. Reward noise is zero-mean with scale
/// noise_sigma (Gaussian std, or half-width/sqrt(3) for uniform); Bernoulli
/// rewards draw r in {0,1} with the mean reward as success probability.
struct LinearMdp {
  int num_states = 0;
  int num_actions = 0;
  int horizon = 0;
  Eigen::MatrixXd features;      // (S*A) x d
  Eigen::MatrixXd measures;      // S x d
  Eigen::VectorXd reward_param;  // d
  double noise_sigma = 0.0;
  RewardNoise noise = RewardNoise::gaussian;
  Eigen::VectorXd init_dist;  // S
  double param_bound = 1.0;

  int dim() const { return static_cast<int>(features.cols()); }
  int num_pairs() const { return num_states * num_actions; }
  int pair_index(int s, int a) const { return s * num_actions + a; }
  auto phi(int s, int a) const { return features.row(pair_index(s, a)); }
};

/// (S*A) x S matrix of next-state probabilities.
Eigen::MatrixXd transition_matrix(const LinearMdp& mdp);
/// Mean reward per flattened pair.
Eigen::VectorXd mean_rewards(const LinearMdp& mdp);

/// Every violated model invariant, one message each. Empty when valid.
std::vector<std::string> validate_mdp(const LinearMdp& mdp);

/// Embed a tabular MDP as a linear MDP with one-hot features (d = S*A).
/// `transitions` is (S*A) x S with rows indexed s*A+a; `rewards` is S x A.
LinearMdp tabular_embed(const Eigen::MatrixXd& transitions, const Eigen::MatrixXd& rewards, int horizon,
                        double noise_sigma, const Eigen::VectorXd& init_dist,
                        RewardNoise noise = RewardNoise::gaussian);

/// Deterministic nonstationary policy, actions(h, s) for h in [0, H).
class PolicyTable {
 public:
  PolicyTable() = default;
  PolicyTable(int horizon, int num_states, int fill = 0);

  int horizon() const { return horizon_; }
  int num_states() const { return num_states_; }
  int operator()(int h, int s) const { return actions_[static_cast<std::size_t>(h * num_states_ + s)]; }
  int& operator()(int h, int s) { return actions_[static_cast<std::size_t>(h * num_states_ + s)]; }
  const std::vector<int>& raw() const { return actions_; }

  /// Throws std::invalid_argument unless the table fits the MDP.
  void check(const LinearMdp& mdp) const;

  friend bool operator==(const PolicyTable&, const PolicyTable&) = default;

 private:
  int horizon_ = 0;
  int num_states_ = 0;
  std::vector<int> actions_;
};

/// v is (H+1) x S with v.row(H) == 0; q[h] is S x A. Step h is 0-based.
struct ValueTables {
  Eigen::MatrixXd v;
  std::vector<Eigen::MatrixXd> q;
};

struct OptimalSolution {
  PolicyTable policy;
  ValueTables values;
};

/// Exact (B f)(s,a) = r(s,a) + sum_s' P(s'|s,a) f(s').
double bellman_backup(const LinearMdp& mdp, const Eigen::VectorXd& f, int s, int a);

ValueTables exact_policy_values(const LinearMdp& mdp, const PolicyTable& policy);

/// Backward induction; ties go to the lowest action index.
OptimalSolution exact_optimal(const LinearMdp& mdp);

/// Greedy policy of a Q table sequence (lowest index on ties).
PolicyTable greedy_policy(const std::vector<Eigen::MatrixXd>& q);

/// E_{s~mu0}[V_1^pi(s)].
double initial_value(const LinearMdp& mdp, const PolicyTable& policy);

/// Per-step state-action distributions Pr^pi(s_h = s, a_h = a), flattened.
std::vector<Eigen::VectorXd> occupancy_by_step(const LinearMdp& mdp, const PolicyTable& policy);

/// h-averaged state-action occupancy d^pi.
Eigen::VectorXd occupancy(const LinearMdp& mdp, const PolicyTable& policy);

/// SubOpt(pi, comparator) = E_{mu0}[V_1^comparator - V_1^pi]. May be negative.
double suboptimality(const LinearMdp& mdp, const PolicyTable& policy, const PolicyTable& comparator);

/// Offline state-action distribution nu over flattened pairs.
struct OfflineDistribution {
  Eigen::VectorXd probs;

  static OfflineDistribution uniform(int num_pairs);
  /// Throws std::invalid_argument unless nonnegative and summing to 1 (1e-12).
  void check() const;
};

/// E_w[phi phi^T] for any weights over pairs (a distribution or occupancy).
Eigen::MatrixXd covariance(const LinearMdp& mdp, const Eigen::VectorXd& weights);
inline Eigen::MatrixXd covariance(const LinearMdp& mdp, const OfflineDistribution& nu) {
  return covariance(mdp, nu.probs);
}

/// sup_w (w' comparator w) / (w' data w) with 0/0 = 0. Returns +infinity when
/// the comparator covariance has mass outside the range of the data
/// covariance. Throws std::invalid_argument for non-symmetric or indefinite
/// inputs.
double relative_condition_number(const Eigen::MatrixXd& comparator_cov, const Eigen::MatrixXd& data_cov);

/// Draws n i.i.d. clean tuples: (s,a) ~ nu, r = mean + noise, s' ~ P(.|s,a).
Dataset collect_clean(const LinearMdp& mdp, const OfflineDistribution& nu, std::size_t n, std::uint64_t seed);

/// One reward draw for pair (s,a) under the MDP's noise model.
double sample_reward(const LinearMdp& mdp, double mean_reward, Rng& rng);

}  // namespace corrl
