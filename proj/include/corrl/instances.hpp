#pragma once

#include <cstdint>

#include "corrl/mdp.hpp"

namespace corrl {

/// Three-state, two-action, H=2 tabular chain used by the coverage and
/// no-coverage experiments. From state 0, action 0 is optimal by a margin of
/// 0.05 over action 1; in state 2, action 1 is strictly suboptimal and is
/// never visited by the optimal policy.
LinearMdp demo_chain_mdp(double noise_sigma = 0.5);

/// Random distribution over n outcomes (normalized exponentials), with every
/// entry at least `floor` before normalization.
Eigen::VectorXd random_distribution(int n, Rng& rng, double floor = 0.0);

/// Random tabular MDP with mean rewards in [0,1], uniform initial state 0.
LinearMdp random_tabular_mdp(int S, int A, int H, double noise_sigma, std::uint64_t seed);

/// Random low-rank linear MDP: features are points of the probability simplex
/// in R^d, each measure column is a distribution over next states, and
/// theta lies in [0,1]^d. All invariants hold by construction.
LinearMdp random_simplex_mdp(int S, int A, int d, int H, double noise_sigma, std::uint64_t seed);

}  // namespace corrl
