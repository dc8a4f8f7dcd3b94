#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "corrl/dataset.hpp"
#include "corrl/mdp.hpp"

namespace corrl {

/// floor(eps * n), with a small tolerance so that e.g. 0.1 * 1000 gives 100.
std::size_t corruption_budget(double epsilon, std::size_t n);
/// ceil(eps * n) with the same tolerance.
std::size_t corruption_ceiling(double epsilon, std::size_t n);

struct Replacement {
  std::size_t index = 0;
  Transition tuple;
};

/// An adversary's declared edits. At most floor(epsilon * N) replacements on
/// distinct in-range indices.
struct AttackPlan {
  double epsilon = 0.0;
  std::vector<Replacement> replacements;
};

struct AttackFailure {
  std::string reason;
};

using AttackResult = std::variant<AttackPlan, AttackFailure>;

/// Throws std::invalid_argument when the plan breaks its budget or indexes
/// outside [0, n) or repeats an index.
void check_plan(const AttackPlan& plan, std::size_t n);

/// Applies a plan to a copy of `clean`. The mask of the result marks exactly
/// the tuples that changed (on top of any mask already present).
Dataset apply_attack(const Dataset& clean, const AttackPlan& plan);

/// What the adversary may look at before committing.
enum class AdversaryKnowledge { informed, oblivious };

/// Rewrites every positive reward on `target` to zero. Fails when that needs
/// more than the budget. The oblivious variant commits to zeroing every tuple
/// on `target` without reading rewards.
AttackResult concentrated_reward_attack(const Dataset& clean, double epsilon, StateAction target,
                                        AdversaryKnowledge knowledge = AdversaryKnowledge::informed);

/// Flips up to floor(eps N) tuples (target_arm, r = 0) to r = 1, taking
/// candidates in `priority` order first (if given) and then in index order.
/// When `required_flips` is set, fails unless exactly that many flips fit in
/// the budget and the available candidates.
AttackResult bandit_flip_attack(const Dataset& clean, double epsilon, int target_arm,
                                std::optional<std::size_t> required_flips = std::nullopt,
                                std::span<const std::size_t> priority = {});

/// Leverage-targeted reward poisoning aimed at inflating the regression
/// prediction at `target`. Scores c_i = phi(target)^T L^{-1} phi_i with
/// L = sum_i phi_i phi_i^T + I over the clean features, takes the
/// floor(eps N) largest |c_i| (lowest index on ties) and shifts each reward by
/// sign(c_i) * magnitude. Requires 0 <= magnitude <= 2H.
AttackPlan value_poison_attack(const LinearMdp& mdp, const Dataset& clean, double epsilon, StateAction target,
                               double magnitude);

/// Replaces floor(eps N) uniformly chosen tuples' reward by U[-1, 2] and next
/// state by a uniform state.
AttackPlan random_corruption(const Dataset& clean, double epsilon, int num_states, std::uint64_t seed);

}  // namespace corrl
