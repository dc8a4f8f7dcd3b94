#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "corrl/dataset.hpp"
#include "corrl/mdp.hpp"
#include "corrl/oracle.hpp"

namespace corrl {

enum class BonusMode { none, paper, lykouris };

std::string to_string(BonusMode mode);
BonusMode parse_bonus_mode(const std::string& name);

struct BonusConfig {
  BonusMode mode = BonusMode::none;
  double epsilon = 0.0;
  double lambda_const = 1.0;  // c'
  double delta = 0.05;
  double sigma = 0.0;
  double rho = 1.0;
  OracleConstants constants;
  /// Use gamma = sigma + H instead of sigma + H/2.
  bool conservative_gamma = false;
};

/// What the learner knows about the environment: the feature map only.
struct FeatureMap {
  int num_states = 0;
  int num_actions = 0;
  Eigen::MatrixXd features;  // (S*A) x d

  static FeatureMap of(const LinearMdp& mdp) { return {mdp.num_states, mdp.num_actions, mdp.features}; }
  int dim() const { return static_cast<int>(features.cols()); }
  auto phi(int s, int a) const { return features.row(s * num_actions + a); }
};

struct FoldSplit {
  std::vector<std::vector<std::size_t>> folds;
  std::size_t dropped = 0;
};

/// Uniformly random partition of n indices into H folds of floor(n/H) each;
/// the remainder is dropped. Throws when n < H.
FoldSplit split_dataset(std::size_t n, int horizon, std::uint64_t seed);

/// lambda = c' d H log(N / delta) / N.
double regularization_lambda(const BonusConfig& cfg, int d, int horizon, std::size_t n_total);

/// Lambda_h = 3/5 ((1/n) sum phi phi^T + (eps + lambda) I), n = fold size.
Eigen::MatrixXd robust_empirical_cov(const Eigen::MatrixXd& fold_features, double epsilon, double lambda);

/// Scalar multiplier of ||phi||_{Lambda^{-1}} in the corruption-aware bonus:
/// (gamma sqrt(H) poly(d) / sqrt(N) + (gamma + 2 H rho) sqrt(eps) + H rho sqrt(lambda)) sqrt(c2),
/// gamma = sigma + H/2 (sigma + H when conservative), N = H * n_fold.
double paper_bonus_multiplier(const BonusConfig& cfg, int d, int horizon, std::size_t n_fold);

/// multiplier * sqrt(phi^T Lambda^{-1} phi).
double bonus_paper(const Eigen::MatrixXd& lambda_h, const Eigen::VectorXd& phi, const BonusConfig& cfg, int horizon,
                   std::size_t n_fold);

/// H eps sqrt(phi^T Lambda^{-2} phi).
double bonus_lykouris(const Eigen::MatrixXd& lambda_h, const Eigen::VectorXd& phi, int horizon, double epsilon);

struct BonusStats {
  double mean = 0.0;
  double max = 0.0;
};

struct FoldDiagnostics {
  std::size_t size = 0;
  int iterations = 0;
  bool converged = true;
  std::size_t trimmed = 0;
};

/// Output of one R-LSVI run. Step h is 0-based; q_hat[h] is clipped to
/// [0, H - h] (the 1-based range [0, H-h+1]).
struct RlsviRun {
  PolicyTable policy;
  std::vector<Eigen::VectorXd> w_hats;
  std::vector<Eigen::MatrixXd> q_raw;  // phi^T w_hat, before bonus and clipping
  std::vector<Eigen::MatrixXd> q_hat;
  std::vector<Eigen::MatrixXd> gamma;
  Eigen::MatrixXd v_hat;  // (H+1) x S
  std::vector<FoldDiagnostics> folds;
  std::vector<BonusStats> bonus_stats;
  std::size_t n_total = 0;
  std::size_t dropped = 0;
  double lambda = 0.0;
};

/// Robust least-squares value iteration on a (possibly corrupted) dataset.
/// Only the tuples and the feature map are used. Throws OracleFailure with
/// the 1-based fold index when a regression fails.
RlsviRun run_rlsvi(std::span<const Transition> data, const FeatureMap& fmap, int horizon,
                   const OracleSettings& oracle, double oracle_epsilon, const BonusConfig& bonus,
                   std::uint64_t seed);

// ---------------------------------------------------------------------------
// Evaluator-side diagnostics (these use the true MDP).

/// max over (h,s,a) of |q_raw - (B V_hat_{h+1})| - gamma. The bonus is valid
/// on this run iff the result is <= 0.
double bellman_validity_margin(const LinearMdp& mdp, const RlsviRun& run);

/// 2 sum_h E_{(s,a) ~ d_h^comparator}[gamma_h(s,a)], the pessimism bound on
/// SubOpt(pi_hat, comparator).
double pessimism_bound(const LinearMdp& mdp, const RlsviRun& run, const PolicyTable& comparator);

/// Best linear predictor w*_h = theta + sum_s' V(s') mu(s').
Eigen::VectorXd best_linear_predictor(const LinearMdp& mdp, const Eigen::VectorXd& next_values);

/// Checks (1/3)(N Sigma + lambda I) <= sum phi phi^T + lambda I <= (5/3)(N Sigma + lambda I)
/// through the minimum eigenvalues of both difference matrices.
bool covariance_sandwich_holds(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& population_cov, double lambda);

/// CSV with header h,s,a,q_hat,gamma (h is 1-based).
std::string value_dump_csv(const RlsviRun& run);

}  // namespace corrl
