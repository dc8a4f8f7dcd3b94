#include "corrl/lowerbound.hpp"

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "corrl/adversary.hpp"
#include "corrl/rlsvi.hpp"
#include "corrl/rng.hpp"

namespace corrl {

double FrequencyEstimate::std_error() const {
  if (trials == 0) return 0.0;
  const double f = frequency();
  return std::sqrt(f * (1.0 - f) / static_cast<double>(trials));
}

namespace {

void check_tree_shape(int S, int A) {
  if (S < 1) throw std::invalid_argument("tree: need S >= 1");
  if (A <= 2 || A % 2 != 0) throw std::invalid_argument("tree: need A > 2 and A even");
}

}  // namespace

int tree_depth(int num_states, int num_actions) {
  check_tree_shape(num_states, num_actions);
  const long long k = num_actions / 2;
  const long long target = static_cast<long long>(num_states) * (k - 1) + 1;
  int depth = 0;
  long long power = 1;
  while (power < target) {
    power *= k;
    ++depth;
  }
  return std::max(depth, 1);
}

StateAction default_tree_probe(int num_states, int num_actions) {
  check_tree_shape(num_states, num_actions);
  return num_states == 1 ? StateAction{0, num_actions - 2} : StateAction{0, num_actions - 1};
}

OfflineDistribution tree_distribution(int num_states, int num_actions, StateAction probe, double down_weight) {
  check_tree_shape(num_states, num_actions);
  if (!(down_weight > 0.0 && down_weight <= 1.0)) throw std::invalid_argument("tree_distribution: down_weight must lie in (0, 1]");
  const int n = num_states * num_actions;
  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  w(probe.state * num_actions + probe.action) = down_weight;
  return {w / w.sum()};
}

TreeInstancePair build_tree_pair(int num_states, int num_actions, int horizon, double epsilon,
                                 const std::optional<OfflineDistribution>& nu) {
  const int S = num_states, A = num_actions, H = horizon;
  check_tree_shape(S, A);
  if (H < 1) throw std::invalid_argument("tree: need H >= 1");
  if (!(epsilon >= 0.0)) throw std::invalid_argument("tree: need eps >= 0");
  const int k = A / 2;
  // S <= k^(H/2)  <=>  S^2 <= k^H
  {
    long double power = 1.0L;
    for (int i = 0; i < H && power < 1e30L; ++i) power *= k;
    if (static_cast<long double>(S) * S > power) throw std::invalid_argument("tree: need S <= (A/2)^(H/2)");
  }
  const double sae = static_cast<double>(S) * A * epsilon;
  if (sae > 1.0 + 1e-12) throw std::invalid_argument("tree: need S*A*eps <= 1");

  TreeInstancePair pair;
  pair.epsilon = epsilon;
  pair.depth = tree_depth(S, A);
  pair.star = {S - 1, A - 1};
  pair.nu = nu ? *nu : tree_distribution(S, A, default_tree_probe(S, A));
  pair.nu.check();
  if (pair.nu.probs.size() != S * A) throw std::invalid_argument("tree: nu has the wrong length");
  Eigen::Index argmin = 0;
  pair.nu.probs.minCoeff(&argmin);  // first minimum
  pair.probe = {static_cast<int>(argmin) / A, static_cast<int>(argmin) % A};
  if (pair.probe == pair.star) throw std::invalid_argument("tree: argmin nu coincides with the rewarding pair");

  Eigen::MatrixXd P = Eigen::MatrixXd::Zero(S * A, S);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      int next = s;
      if (a < k) {
        const long long child = static_cast<long long>(k) * s + 1 + a;
        if (child < S) next = static_cast<int>(child);
      }
      P(s * A + a, next) = 1.0;
    }
  }
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(S, A);
  R(pair.star.state, pair.star.action) = sae / 2.0;
  Eigen::MatrixXd Rp = R;
  Rp(pair.probe.state, pair.probe.action) = sae;
  Eigen::VectorXd init = Eigen::VectorXd::Zero(S);
  init(0) = 1.0;
  pair.mdp_m = tabular_embed(P, R, H, 0.5, init, RewardNoise::bernoulli);
  pair.mdp_mprime = tabular_embed(P, Rp, H, 0.5, init, RewardNoise::bernoulli);
  return pair;
}

MinimaxReport verify_minimax_gap(const TreeInstancePair& pair, std::size_t max_policies) {
  const LinearMdp& m = pair.mdp_m;
  const LinearMdp& mp = pair.mdp_mprime;
  const int S = m.num_states, A = m.num_actions, H = m.horizon;

  MinimaxReport report;
  const OptimalSolution opt_m = exact_optimal(m);
  const OptimalSolution opt_mp = exact_optimal(mp);
  report.v_star_m = m.init_dist.dot(opt_m.values.v.row(0).transpose());
  report.v_star_mprime = mp.init_dist.dot(opt_mp.values.v.row(0).transpose());
  report.bound = (H - pair.depth) * static_cast<double>(S) * A * pair.epsilon / 4.0;

  const Eigen::MatrixXd P = transition_matrix(m);
  const Eigen::VectorXd r_m = mean_rewards(m), r_mp = mean_rewards(mp);
  double best = std::numeric_limits<double>::infinity();
  std::size_t count = 0;
  bool aborted = false;

  // Depth-first over (h, reachable state) assignments; the value of each
  // branch is accumulated step by step, since rewards only depend on the
  // state distribution at each step.
  std::function<void(int, const Eigen::VectorXd&, double, double)> step = [&](int h, const Eigen::VectorXd& dist,
                                                                               double val_m, double val_mp) {
    if (aborted) return;
    if (h == H) {
      if (++count > max_policies) {
        aborted = true;
        return;
      }
      best = std::min(best, std::max(report.v_star_m - val_m, report.v_star_mprime - val_mp));
      return;
    }
    std::vector<int> reachable;
    for (int s = 0; s < S; ++s) {
      if (dist(s) > 0.0) reachable.push_back(s);
    }
    std::vector<int> choice(reachable.size(), 0);
    while (true) {
      Eigen::VectorXd next = Eigen::VectorXd::Zero(S);
      double gm = 0.0, gmp = 0.0;
      for (std::size_t i = 0; i < reachable.size(); ++i) {
        const int row = reachable[i] * A + choice[i];
        const double w = dist(reachable[i]);
        gm += w * r_m(row);
        gmp += w * r_mp(row);
        next += w * P.row(row).transpose();
      }
      step(h + 1, next, val_m + gm, val_mp + gmp);
      if (aborted) return;
      std::size_t i = 0;
      while (i < choice.size() && ++choice[i] == A) choice[i++] = 0;
      if (i == choice.size()) break;
    }
  };
  step(0, m.init_dist, 0.0, 0.0);

  if (aborted) {
    report.exhaustive = false;
    report.policies_evaluated = 2;
    best = std::numeric_limits<double>::infinity();
    for (const PolicyTable* pi : {&opt_m.policy, &opt_mp.policy}) {
      const double sub_m = report.v_star_m - initial_value(m, *pi);
      const double sub_mp = report.v_star_mprime - initial_value(mp, *pi);
      best = std::min(best, std::max(sub_m, sub_mp));
    }
  } else {
    report.policies_evaluated = count;
  }
  report.min_simultaneous_regret = best;
  report.holds = best >= report.bound - 1e-12;
  return report;
}

FrequencyEstimate simulate_indistinguishability(const TreeInstancePair& pair, std::size_t n, std::size_t trials,
                                                std::uint64_t seed) {
  FrequencyEstimate est;
  est.trials = trials;
  for (std::size_t t = 0; t < trials; ++t) {
    const Dataset clean = collect_clean(pair.mdp_mprime, pair.nu, n, derive_seed(seed, t));
    const AttackResult result =
        concentrated_reward_attack(clean, pair.epsilon, pair.probe, AdversaryKnowledge::informed);
    if (std::holds_alternative<AttackPlan>(result)) ++est.successes;
  }
  return est;
}

// ---------------------------------------------------------------------------

BanditInstancePair build_bandit_pair(double p, double epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("bandit: need eps > 0");
  if (!(epsilon <= p)) throw std::invalid_argument("bandit: need eps <= p");
  if (!(p <= 0.5)) throw std::invalid_argument("bandit: need p <= 1/2");
  BanditInstancePair pair;
  pair.p = p;
  pair.epsilon = epsilon;
  pair.kappa1 = 1.0 / p;
  pair.kappa2 = 1.0 / (1.0 - p);
  pair.nu.probs = Eigen::Vector2d(p, 1.0 - p);
  const Eigen::MatrixXd P = Eigen::MatrixXd::Ones(2, 1);
  const Eigen::VectorXd init = Eigen::VectorXd::Ones(1);
  Eigen::MatrixXd R1(1, 2), R2(1, 2);
  R1 << pair.arm1_mean1(), 0.5;
  R2 << pair.arm1_mean2(), 0.5;
  pair.instance1 = tabular_embed(P, R1, 1, 0.5, init, RewardNoise::bernoulli);
  pair.instance2 = tabular_embed(P, R2, 1, 0.5, init, RewardNoise::bernoulli);
  return pair;
}

CoupledDraw coupled_datasets(const BanditInstancePair& pair, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  const double half_gap = pair.epsilon / (2.0 * pair.p);
  std::vector<Transition> d1(n), d2(n);
  CoupledDraw draw;
  for (std::size_t i = 0; i < n; ++i) {
    const int arm = rng.uniform() < pair.p ? 0 : 1;
    double x = 0.0, y = 0.0;
    if (arm == 1) {
      x = y = rng.bernoulli(0.5) ? 1.0 : 0.0;
    } else {
      const double u = rng.uniform();
      x = u > 0.5 + half_gap ? 1.0 : 0.0;
      y = u > 0.5 - half_gap ? 1.0 : 0.0;
      ++draw.arm1_count;
      if (x != y) draw.mismatches.push_back(i);
    }
    d1[i] = {0, arm, y, 0};
    d2[i] = {0, arm, x, 0};
  }
  draw.instance1 = Dataset(std::move(d1));
  draw.instance2 = Dataset(std::move(d2));
  draw.collision = draw.mismatches.size() <= corruption_budget(pair.epsilon, n) &&
                   static_cast<double>(draw.arm1_count) <= pair.p * static_cast<double>(n);
  return draw;
}

Dataset attack_coupled(const BanditInstancePair& pair, const CoupledDraw& draw) {
  // Flip the mismatched tuples only; further flips would break the match with instance 1.
  const std::size_t flips =
      std::min(draw.mismatches.size(), corruption_budget(pair.epsilon, draw.instance2.size()));
  const AttackResult result = bandit_flip_attack(draw.instance2, pair.epsilon, 0, flips, draw.mismatches);
  return apply_attack(draw.instance2, std::get<AttackPlan>(result));
}

CouplingReport simulate_coupling(const BanditInstancePair& pair, std::size_t n, std::size_t trials,
                                 std::uint64_t seed) {
  CouplingReport report;
  report.collisions.trials = trials;
  double sum_x = 0.0, sum_y = 0.0;
  std::size_t arm1_total = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    const CoupledDraw draw = coupled_datasets(pair, n, derive_seed(seed, t));
    if (draw.collision) ++report.collisions.successes;
    report.mismatch_counts.push_back(draw.mismatches.size());
    report.arm1_counts.push_back(draw.arm1_count);
    for (std::size_t i = 0; i < n; ++i) {
      const Transition& a = draw.instance1.tuples[i];
      const Transition& b = draw.instance2.tuples[i];
      if (a.action != 0) continue;
      sum_y += a.reward;
      sum_x += b.reward;
      if (a.reward < b.reward) report.monotone = false;
    }
    arm1_total += draw.arm1_count;
  }
  if (arm1_total > 0) {
    report.mean_x = sum_x / static_cast<double>(arm1_total);
    report.mean_y = sum_y / static_cast<double>(arm1_total);
  }
  return report;
}

double binomial_gof_pvalue(const std::vector<std::size_t>& counts, const std::vector<std::size_t>& sizes, double q,
                           std::uint64_t seed, int bins) {
  if (counts.size() != sizes.size() || counts.empty()) throw std::invalid_argument("binomial_gof_pvalue: bad input");
  if (!(q >= 0.0 && q <= 1.0) || bins < 2) throw std::invalid_argument("binomial_gof_pvalue: bad parameters");
  Rng rng(seed);
  std::vector<double> observed(static_cast<std::size_t>(bins), 0.0);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (counts[i] > sizes[i]) throw std::invalid_argument("binomial_gof_pvalue: count exceeds trials");
    double lo = 0.0, hi = 1.0;
    if (sizes[i] > 0) {
      const boost::math::binomial_distribution<double> dist(static_cast<double>(sizes[i]), q);
      const auto k = static_cast<double>(counts[i]);
      hi = boost::math::cdf(dist, k);
      lo = counts[i] == 0 ? 0.0 : boost::math::cdf(dist, k - 1.0);
    }
    const double u = lo + rng.uniform() * (hi - lo);
    const auto cell = std::min(static_cast<std::size_t>(u * bins), static_cast<std::size_t>(bins - 1));
    observed[cell] += 1.0;
  }
  const double expected = static_cast<double>(counts.size()) / bins;
  double stat = 0.0;
  for (double o : observed) stat += (o - expected) * (o - expected) / expected;
  const boost::math::chi_squared_distribution<double> chi(bins - 1);
  return boost::math::cdf(boost::math::complement(chi, stat));
}

std::string to_string(BanditLearner learner) {
  switch (learner) {
    case BanditLearner::always_a2: return "always-a2";
    case BanditLearner::empirical_argmax: return "empirical-argmax";
    case BanditLearner::rlsvi_none: return "rlsvi-none";
    case BanditLearner::rlsvi_paper: return "rlsvi-paper";
  }
  return "always-a2";
}

BanditLearner parse_bandit_learner(const std::string& name) {
  if (name == "always-a2") return BanditLearner::always_a2;
  if (name == "empirical-argmax") return BanditLearner::empirical_argmax;
  if (name == "rlsvi-none") return BanditLearner::rlsvi_none;
  if (name == "rlsvi-paper") return BanditLearner::rlsvi_paper;
  throw std::invalid_argument("unknown learner: " + name);
}

int choose_arm(BanditLearner learner, const Dataset& data, double assumed_epsilon, std::uint64_t seed) {
  switch (learner) {
    case BanditLearner::always_a2: return 1;
    case BanditLearner::empirical_argmax: {
      double sum[2] = {0.0, 0.0};
      std::size_t cnt[2] = {0, 0};
      for (const auto& t : data.tuples) {
        sum[t.action] += t.reward;
        ++cnt[t.action];
      }
      const double m0 = cnt[0] ? sum[0] / static_cast<double>(cnt[0]) : 0.0;
      const double m1 = cnt[1] ? sum[1] / static_cast<double>(cnt[1]) : 0.0;
      return m1 > m0 ? 1 : 0;
    }
    case BanditLearner::rlsvi_none:
    case BanditLearner::rlsvi_paper: {
      FeatureMap fmap{1, 2, Eigen::MatrixXd::Identity(2, 2)};
      OracleSettings oracle;
      BonusConfig bonus;
      bonus.mode = learner == BanditLearner::rlsvi_paper ? BonusMode::paper : BonusMode::none;
      bonus.epsilon = assumed_epsilon;
      bonus.sigma = 0.5;
      const RlsviRun run = run_rlsvi(data.view(), fmap, 1, oracle, assumed_epsilon, bonus, seed);
      return run.policy(0, 0);
    }
  }
  return 0;
}

TradeoffReport agnostic_tradeoff_experiment(const BanditInstancePair& pair, BanditLearner learner, std::size_t n,
                                            std::size_t trials, std::uint64_t seed) {
  TradeoffReport report;
  const double best1 = std::max(pair.arm1_mean1(), 0.5), best2 = std::max(pair.arm1_mean2(), 0.5);
  auto mean1 = [&](int arm) { return arm == 0 ? pair.arm1_mean1() : 0.5; };
  auto mean2 = [&](int arm) { return arm == 0 ? pair.arm1_mean2() : 0.5; };
  double sc = 0.0, sk = 0.0, sc_col = 0.0, sk_col = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t s = derive_seed(seed, t);
    const CoupledDraw draw = coupled_datasets(pair, n, s);
    const Dataset attacked = attack_coupled(pair, draw);
    TradeoffRow row;
    row.trial = t;
    row.collision = draw.collision;
    row.clean_subopt = best1 - mean1(choose_arm(learner, draw.instance1, pair.epsilon, derive_seed(s, 1)));
    row.corrupt_subopt = best2 - mean2(choose_arm(learner, attacked, pair.epsilon, derive_seed(s, 2)));
    sc += row.clean_subopt;
    sk += row.corrupt_subopt;
    if (row.collision) {
      ++report.collisions;
      sc_col += row.clean_subopt;
      sk_col += row.corrupt_subopt;
    }
    report.rows.push_back(row);
  }
  if (trials > 0) {
    report.mean_clean_subopt = sc / static_cast<double>(trials);
    report.mean_corrupt_subopt = sk / static_cast<double>(trials);
  }
  if (report.collisions > 0) {
    report.mean_clean_subopt_on_collision = sc_col / static_cast<double>(report.collisions);
    report.mean_corrupt_subopt_on_collision = sk_col / static_cast<double>(report.collisions);
  }
  return report;
}

std::string tradeoff_csv(const TradeoffReport& report) {
  std::ostringstream os;
  os.precision(17);
  os << "trial,collision,clean_subopt,corrupt_subopt\n";
  for (const auto& r : report.rows) {
    os << r.trial << ',' << (r.collision ? 1 : 0) << ',' << r.clean_subopt << ',' << r.corrupt_subopt << '\n';
  }
  return os.str();
}

}  // namespace corrl
