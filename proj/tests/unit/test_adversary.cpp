#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "corrl/adversary.hpp"
#include "corrl/instances.hpp"
#include "support/oracles.hpp"

using namespace corrl;

namespace {

Dataset make_data(std::vector<Transition> t) { return Dataset(std::move(t)); }

// Same tuple repeated with the given rewards.
Dataset rewards_on(StateAction sa, const std::vector<double>& rewards) {
  std::vector<Transition> t;
  for (double r : rewards) t.push_back({sa.state, sa.action, r, 0});
  return make_data(t);
}

AttackPlan plan_of(const AttackResult& r) {
  REQUIRE(std::holds_alternative<AttackPlan>(r));
  return std::get<AttackPlan>(r);
}

}  // namespace

TEST_CASE("budget rounding") {
  CHECK(corruption_budget(0.1, 1000) == 100);
  CHECK(corruption_budget(0.2, 10) == 2);
  CHECK(corruption_budget(0.05, 99) == 4);
  CHECK(corruption_ceiling(0.05, 99) == 5);
  CHECK(corruption_ceiling(0.1, 1000) == 100);
  CHECK(corruption_budget(0.0, 1000) == 0);
}

TEST_CASE("apply_attack: identity, Hamming distance, budget rejection") {
  const auto m = demo_chain_mdp();
  const auto clean = collect_clean(m, OfflineDistribution::uniform(6), 10, 1);
  const auto same = apply_attack(clean, AttackPlan{0.0, {}});
  CHECK(same.tuples == clean.tuples);
  CHECK(same.corrupted_count() == 0);

  AttackPlan two{0.2, {}};
  for (std::size_t i : {3u, 7u}) {
    Transition t = clean.tuples[i];
    t.reward += 5.0;
    two.replacements.push_back({i, t});
  }
  const auto out = apply_attack(clean, two);
  CHECK(diff_indices(clean.view(), out.view()).size() == 2);
  CHECK(out.corrupted_count() == 2);

  AttackPlan three = two;
  Transition t = clean.tuples[0];
  t.reward += 1.0;
  three.replacements.push_back({0, t});
  CHECK_THROWS_AS(apply_attack(clean, three), std::invalid_argument);

  AttackPlan dup{0.2, {two.replacements[0], two.replacements[0]}};
  CHECK_THROWS_AS(check_plan(dup, 10), std::invalid_argument);
  AttackPlan oob{0.2, {{10, t}}};
  CHECK_THROWS_AS(check_plan(oob, 10), std::invalid_argument);
}

TEST_CASE("concentrated_reward_attack") {
  const StateAction target{1, 0};
  const auto none = rewards_on(target, {0.0, 0.0, 0.0, 0.0});
  CHECK(plan_of(concentrated_reward_attack(none, 0.25, target)).replacements.empty());

  auto three = rewards_on(target, {1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
  const auto fail = concentrated_reward_attack(three, 0.2, target);
  CHECK(std::holds_alternative<AttackFailure>(fail));

  auto fits = rewards_on(target, {1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0});
  const auto plan = plan_of(concentrated_reward_attack(fits, 0.2, target));
  const auto attacked = apply_attack(fits, plan);
  for (const auto& t : attacked.tuples) CHECK(t.reward == 0.0);

  const auto obl = concentrated_reward_attack(fits, 0.2, target, AdversaryKnowledge::oblivious);
  CHECK(std::holds_alternative<AttackFailure>(obl));
}

TEST_CASE("bandit_flip_attack") {
  const auto ones = rewards_on({0, 0}, {1.0, 1.0, 1.0});
  CHECK(plan_of(bandit_flip_attack(ones, 0.5, 0)).replacements.empty());

  std::vector<Transition> t;
  for (int i = 0; i < 5; ++i) t.push_back({0, 0, 0.0, 0});
  for (int i = 0; i < 5; ++i) t.push_back({0, 1, 0.0, 0});
  const auto data = make_data(t);
  const auto plan = plan_of(bandit_flip_attack(data, 0.3, 0));
  REQUIRE(plan.replacements.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) {
    CHECK(plan.replacements[k].index == k);
    CHECK(plan.replacements[k].tuple.reward == 1.0);
  }
  CHECK(std::holds_alternative<AttackFailure>(bandit_flip_attack(data, 0.3, 0, std::size_t{4})));
  CHECK(std::holds_alternative<AttackPlan>(bandit_flip_attack(data, 0.3, 0, std::size_t{3})));

  const std::vector<std::size_t> priority{4, 2};
  const auto pri = plan_of(bandit_flip_attack(data, 0.3, 0, std::nullopt, priority));
  std::vector<std::size_t> idx;
  for (const auto& r : pri.replacements) idx.push_back(r.index);
  std::sort(idx.begin(), idx.end());
  CHECK(idx == std::vector<std::size_t>{0, 2, 4});
}

TEST_CASE("value_poison_attack: empty, ties, brute-force subset oracle") {
  const auto m = demo_chain_mdp();
  const auto clean = collect_clean(m, OfflineDistribution::uniform(6), 50, 2);
  CHECK(value_poison_attack(m, clean, 0.0, {0, 1}, 1.0).replacements.empty());
  CHECK_THROWS_AS(value_poison_attack(m, clean, 0.1, {0, 1}, 2.0 * m.horizon + 0.1), std::invalid_argument);

  const auto same = rewards_on({1, 1}, std::vector<double>(10, 0.5));
  const auto tie = value_poison_attack(m, same, 0.3, {0, 1}, 1.0);
  REQUIRE(tie.replacements.size() == 3);
  for (std::size_t k = 0; k < 3; ++k) CHECK(tie.replacements[k].index == k);

  // d = 2, ten handcrafted features (five states, two actions), one tuple per pair.
  LinearMdp h;
  h.num_states = 5;
  h.num_actions = 2;
  h.horizon = 2;
  h.features.resize(10, 2);
  h.features << 0.9, 0.1, -0.3, 0.8, 0.5, 0.5, 0.05, -0.9, -0.7, 0.2, 0.3, 0.3, 0.6, -0.6, 0.1, 0.95, -0.4, -0.4,
      0.8, 0.0;
  h.measures = Eigen::MatrixXd::Zero(5, 2);
  h.reward_param = Eigen::VectorXd::Zero(2);
  h.init_dist = Eigen::VectorXd::Unit(5, 0);
  std::vector<Transition> tup;
  for (int i = 0; i < 10; ++i) tup.push_back({i / 2, i % 2, 0.0, 0});
  const Dataset d10(tup);
  for (double eps : {0.1, 0.2, 0.3}) {
    const std::size_t k = corruption_budget(eps, 10);
    for (int target = 0; target < 10; ++target) {
      const StateAction ts{target / 2, target % 2};
      const auto plan = value_poison_attack(h, d10, eps, ts, 1.5);
      // Oracle: max over subsets of size k and signs of phi_t' L^{-1} sum phi_i y_i, |y_i| = 1.5.
      Eigen::MatrixXd L = h.features.transpose() * h.features + Eigen::MatrixXd::Identity(2, 2);
      const Eigen::VectorXd dir = L.fullPivLu().solve(h.features.row(target).transpose());
      auto bias = [&](const std::vector<std::size_t>& set, const std::vector<double>& y) {
        double b = 0;
        for (std::size_t j = 0; j < set.size(); ++j) b += dir.dot(h.features.row(set[j]).transpose()) * y[j];
        return b;
      };
      double best = -1e300;
      for (unsigned mask = 0; mask < 1024u; ++mask) {
        if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
        std::vector<std::size_t> set;
        for (std::size_t i = 0; i < 10; ++i)
          if (mask >> i & 1u) set.push_back(i);
        for (unsigned sg = 0; sg < (1u << k); ++sg) {
          std::vector<double> y;
          for (std::size_t j = 0; j < k; ++j) y.push_back(sg >> j & 1u ? 1.5 : -1.5);
          best = std::max(best, bias(set, y));
        }
      }
      std::vector<std::size_t> chosen;
      std::vector<double> shifts;
      for (const auto& r : plan.replacements) {
        chosen.push_back(r.index);
        shifts.push_back(r.tuple.reward - d10.tuples[r.index].reward);
      }
      CHECK(chosen.size() == k);
      CHECK(std::abs(bias(chosen, shifts) - best) < 1e-12);
    }
  }
}

TEST_CASE("random_corruption: empty, deterministic, exact count") {
  const auto m = demo_chain_mdp();
  const auto clean = collect_clean(m, OfflineDistribution::uniform(6), 1000, 3);
  CHECK(random_corruption(clean, 0.0, 3, 1).replacements.empty());
  const auto a = random_corruption(clean, 0.1, 3, 7);
  const auto b = random_corruption(clean, 0.1, 3, 7);
  CHECK(a.replacements.size() == 100);
  REQUIRE(a.replacements.size() == b.replacements.size());
  for (std::size_t i = 0; i < a.replacements.size(); ++i) {
    CHECK(a.replacements[i].index == b.replacements[i].index);
    CHECK(a.replacements[i].tuple == b.replacements[i].tuple);
  }
}

TEST_CASE("property: budget safety, mask fidelity and determinism for every attack") {
  std::mt19937_64 gen(99);
  std::uniform_real_distribution<double> eps_dist(0.0, 0.3);
  for (int trial = 0; trial < 60; ++trial) {
    const auto m = random_tabular_mdp(3, 2, 2, 0.3, 100 + trial);
    const std::size_t n = 20 + static_cast<std::size_t>(gen() % 300);
    const double eps = eps_dist(gen);
    const auto clean = collect_clean(m, OfflineDistribution::uniform(6), n, 200 + trial);
    std::vector<AttackPlan> plans;
    plans.push_back(value_poison_attack(m, clean, eps, {0, 1}, 1.0));
    plans.push_back(random_corruption(clean, eps, 3, 300 + trial));
    if (auto r = concentrated_reward_attack(clean, eps, {1, 0}); std::holds_alternative<AttackPlan>(r))
      plans.push_back(std::get<AttackPlan>(r));
    if (auto r = bandit_flip_attack(clean, eps, 1); std::holds_alternative<AttackPlan>(r))
      plans.push_back(std::get<AttackPlan>(r));
    for (const auto& plan : plans) {
      const auto out = apply_attack(clean, plan);
      const auto diff = diff_indices(clean.view(), out.view());
      CHECK(diff.size() <= corruption_budget(eps, n));
      for (std::size_t i = 0; i < n; ++i) {
        const bool changed = std::find(diff.begin(), diff.end(), i) != diff.end();
        CHECK(out.corrupted_mask[i] == changed);
      }
    }
    const auto again = value_poison_attack(m, clean, eps, {0, 1}, 1.0);
    CHECK(again.replacements.size() == plans[0].replacements.size());
    for (std::size_t i = 0; i < again.replacements.size(); ++i)
      CHECK(again.replacements[i].tuple == plans[0].replacements[i].tuple);
  }
}
