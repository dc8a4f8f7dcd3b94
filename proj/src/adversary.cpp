#include "corrl/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace corrl {

namespace {
constexpr double kRoundingSlack = 1e-9;
}

std::size_t corruption_budget(double epsilon, std::size_t n) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
  return static_cast<std::size_t>(std::floor(epsilon * static_cast<double>(n) + kRoundingSlack));
}

std::size_t corruption_ceiling(double epsilon, std::size_t n) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw std::invalid_argument("epsilon must lie in [0,1]");
  return static_cast<std::size_t>(std::ceil(epsilon * static_cast<double>(n) - kRoundingSlack));
}

void check_plan(const AttackPlan& plan, std::size_t n) {
  const std::size_t budget = corruption_budget(plan.epsilon, n);
  if (plan.replacements.size() > budget) {
    throw std::invalid_argument("attack plan has " + std::to_string(plan.replacements.size()) +
                                " replacements, budget is " + std::to_string(budget));
  }
  std::vector<bool> seen(n, false);
  for (const auto& rep : plan.replacements) {
    if (rep.index >= n) throw std::invalid_argument("attack plan index " + std::to_string(rep.index) + " out of range");
    if (seen[rep.index]) throw std::invalid_argument("attack plan repeats index " + std::to_string(rep.index));
    seen[rep.index] = true;
  }
}

Dataset apply_attack(const Dataset& clean, const AttackPlan& plan) {
  check_plan(plan, clean.size());
  Dataset out = clean;
  if (out.corrupted_mask.size() != out.tuples.size()) out.corrupted_mask.assign(out.tuples.size(), false);
  for (const auto& rep : plan.replacements) {
    if (!(out.tuples[rep.index] == rep.tuple)) {
      out.tuples[rep.index] = rep.tuple;
      out.corrupted_mask[rep.index] = true;
    }
  }
  return out;
}

AttackResult concentrated_reward_attack(const Dataset& clean, double epsilon, StateAction target,
                                        AdversaryKnowledge knowledge) {
  AttackPlan plan{epsilon, {}};
  for (std::size_t i = 0; i < clean.size(); ++i) {
    const Transition& t = clean.tuples[i];
    if (t.state != target.state || t.action != target.action) continue;
    if (knowledge == AdversaryKnowledge::informed && !(t.reward > 0.0)) continue;
    Transition edited = t;
    edited.reward = 0.0;
    plan.replacements.push_back({i, edited});
  }
  if (plan.replacements.size() > corruption_budget(epsilon, clean.size())) {
    return AttackFailure{"budget exceeded"};
  }
  return plan;
}

AttackResult bandit_flip_attack(const Dataset& clean, double epsilon, int target_arm,
                                std::optional<std::size_t> required_flips, std::span<const std::size_t> priority) {
  const std::size_t budget = corruption_budget(epsilon, clean.size());
  auto eligible = [&](std::size_t i) {
    const Transition& t = clean.tuples[i];
    return t.action == target_arm && t.reward == 0.0;
  };
  std::vector<bool> taken(clean.size(), false);
  std::vector<std::size_t> order;
  for (std::size_t i : priority) {
    if (i < clean.size() && !taken[i] && eligible(i)) {
      taken[i] = true;
      order.push_back(i);
    }
  }
  for (std::size_t i = 0; i < clean.size(); ++i) {
    if (!taken[i] && eligible(i)) order.push_back(i);
  }
  const std::size_t want = required_flips.value_or(budget);
  if (required_flips && (want > budget || want > order.size())) {
    return AttackFailure{"cannot flip " + std::to_string(want) + " tuples (budget " + std::to_string(budget) +
                         ", available " + std::to_string(order.size()) + ")"};
  }
  AttackPlan plan{epsilon, {}};
  for (std::size_t k = 0; k < std::min(want, order.size()); ++k) {
    Transition edited = clean.tuples[order[k]];
    edited.reward = 1.0;
    plan.replacements.push_back({order[k], edited});
  }
  return plan;
}

AttackPlan value_poison_attack(const LinearMdp& mdp, const Dataset& clean, double epsilon, StateAction target,
                               double magnitude) {
  if (magnitude < 0.0 || magnitude > 2.0 * mdp.horizon) {
    throw std::invalid_argument("value_poison_attack: magnitude must lie in [0, 2H]");
  }
  const std::size_t n = clean.size();
  const std::size_t budget = corruption_budget(epsilon, n);
  AttackPlan plan{epsilon, {}};
  if (budget == 0) return plan;

  const int d = mdp.dim();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Identity(d, d);
  for (const auto& t : clean.tuples) {
    const Eigen::VectorXd phi = mdp.phi(t.state, t.action).transpose();
    gram.selfadjointView<Eigen::Lower>().rankUpdate(phi);
  }
  gram = gram.selfadjointView<Eigen::Lower>();
  const Eigen::VectorXd direction = gram.ldlt().solve(mdp.phi(target.state, target.action).transpose());

  std::vector<double> leverage(n);
  for (std::size_t i = 0; i < n; ++i) {
    leverage[i] = mdp.phi(clean.tuples[i].state, clean.tuples[i].action).dot(direction);
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(leverage[a]) > std::abs(leverage[b]); });
  order.resize(budget);
  std::sort(order.begin(), order.end());
  for (std::size_t i : order) {
    Transition edited = clean.tuples[i];
    edited.reward += leverage[i] < 0.0 ? -magnitude : magnitude;
    plan.replacements.push_back({i, edited});
  }
  return plan;
}

AttackPlan random_corruption(const Dataset& clean, double epsilon, int num_states, std::uint64_t seed) {
  if (num_states <= 0) throw std::invalid_argument("random_corruption: num_states must be positive");
  const std::size_t budget = corruption_budget(epsilon, clean.size());
  Rng rng(seed);
  // Partial Fisher-Yates: the first `budget` entries are a uniform subset.
  std::vector<std::size_t> idx(clean.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t k = 0; k < budget; ++k) {
    std::swap(idx[k], idx[k + rng.index(clean.size() - k)]);
  }
  idx.resize(budget);
  std::sort(idx.begin(), idx.end());
  AttackPlan plan{epsilon, {}};
  for (std::size_t i : idx) {
    Transition edited = clean.tuples[i];
    edited.reward = rng.uniform(-1.0, 2.0);
    edited.next_state = static_cast<int>(rng.index(static_cast<std::size_t>(num_states)));
    plan.replacements.push_back({i, edited});
  }
  return plan;
}

}  // namespace corrl
