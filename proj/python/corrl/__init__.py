"""Corruption-robust offline RL in linear MDPs (C++ core)."""

from ._core import (
    LinearMdp,
    bandit_coupling,
    corruption_budget,
    demo_chain_mdp,
    exact_optimal,
    exact_policy_values,
    max_possible_gap,
    minimax_gap,
    occupancy,
    random_tabular_mdp,
    run_bonus_sweep,
    run_experiment,
    sha256_hex,
    sweep_covariance,
    tree_indistinguishability,
    validate_mdp,
)

__all__ = [
    "LinearMdp",
    "bandit_coupling",
    "corruption_budget",
    "demo_chain_mdp",
    "exact_optimal",
    "exact_policy_values",
    "max_possible_gap",
    "minimax_gap",
    "occupancy",
    "random_tabular_mdp",
    "run_bonus_sweep",
    "run_experiment",
    "sha256_hex",
    "sweep_covariance",
    "tree_indistinguishability",
    "validate_mdp",
]
