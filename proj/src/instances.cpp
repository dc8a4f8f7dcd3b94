#include "corrl/instances.hpp"

#include <cmath>
#include <stdexcept>

namespace corrl {

LinearMdp demo_chain_mdp(double noise_sigma) {
  constexpr int S = 3, A = 2;
  Eigen::MatrixXd P(S * A, S);
  P << 0.0, 0.8, 0.2,     // (0,0)
      0.0, 0.2, 0.8,      // (0,1)
      1.0 / 3, 1.0 / 3, 1.0 / 3,  // (1,0)
      1.0 / 3, 1.0 / 3, 1.0 / 3,  // (1,1)
      0.5, 0.25, 0.25,    // (2,0)
      0.5, 0.25, 0.25;    // (2,1)
  Eigen::MatrixXd r(S, A);
  r << 0.50, 0.39,
      0.30, 0.20,
      0.40, 0.25;
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(S);
  mu0(0) = 1.0;
  return tabular_embed(P, r, 2, noise_sigma, mu0);
}

Eigen::VectorXd random_distribution(int n, Rng& rng, double floor) {
  Eigen::VectorXd p(n);
  for (int i = 0; i < n; ++i) p(i) = floor - std::log(1.0 - rng.uniform());
  return p / p.sum();
}

LinearMdp random_tabular_mdp(int S, int A, int H, double noise_sigma, std::uint64_t seed) {
  if (S <= 0 || A <= 0 || H <= 0) throw std::invalid_argument("random_tabular_mdp: sizes must be positive");
  Rng rng(seed);
  Eigen::MatrixXd P(S * A, S);
  for (int row = 0; row < S * A; ++row) P.row(row) = random_distribution(S, rng).transpose();
  Eigen::MatrixXd r(S, A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) r(s, a) = rng.uniform();
  }
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(S);
  mu0(0) = 1.0;
  return tabular_embed(P, r, H, noise_sigma, mu0);
}

LinearMdp random_simplex_mdp(int S, int A, int d, int H, double noise_sigma, std::uint64_t seed) {
  if (S <= 0 || A <= 0 || d <= 0 || H <= 0) throw std::invalid_argument("random_simplex_mdp: sizes must be positive");
  Rng rng(seed);
  LinearMdp mdp;
  mdp.num_states = S;
  mdp.num_actions = A;
  mdp.horizon = H;
  mdp.features.resize(S * A, d);
  for (int row = 0; row < S * A; ++row) mdp.features.row(row) = random_distribution(d, rng).transpose();
  mdp.measures.resize(S, d);
  for (int k = 0; k < d; ++k) mdp.measures.col(k) = random_distribution(S, rng);
  mdp.reward_param.resize(d);
  for (int k = 0; k < d; ++k) mdp.reward_param(k) = rng.uniform();
  mdp.noise_sigma = noise_sigma;
  mdp.init_dist = random_distribution(S, rng);
  mdp.param_bound = std::max(mdp.reward_param.norm(), std::sqrt(static_cast<double>(d)));
  return mdp;
}

}  // namespace corrl
