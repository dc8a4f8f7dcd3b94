#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

#include "corrl/adversary.hpp"
#include "corrl/instances.hpp"
#include "corrl/rlsvi.hpp"
#include "support/oracles.hpp"

using namespace corrl;

namespace {

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

BonusConfig paper_bonus(const LinearMdp& m, double eps) {
  BonusConfig b;
  b.mode = BonusMode::paper;
  b.epsilon = eps;
  b.sigma = m.noise_sigma;
  b.rho = m.param_bound;
  return b;
}

}  // namespace

TEST_CASE("split_dataset: sizes, determinism, disjointness, remainder") {
  const auto one = split_dataset(3, 3, 1);
  for (const auto& f : one.folds) CHECK(f.size() == 1);

  const auto a = split_dataset(100, 4, 9), b = split_dataset(100, 4, 9);
  CHECK(a.folds == b.folds);

  const auto r = split_dataset(23, 4, 5);
  CHECK(r.dropped == 3);
  std::vector<int> seen(23, 0);
  for (const auto& f : r.folds) {
    CHECK(f.size() == 5);
    for (std::size_t i : f) ++seen[i];
  }
  for (int c : seen) CHECK(c <= 1);
  CHECK_THROWS_AS(split_dataset(2, 3, 0), std::invalid_argument);
}

TEST_CASE("split_dataset: fold membership is uniform per tuple") {
  const std::size_t n = 6, trials = 10000;
  const int H = 3;
  std::vector<std::vector<double>> counts(n, std::vector<double>(H, 0.0));
  for (std::size_t seed = 0; seed < trials; ++seed) {
    const auto s = split_dataset(n, H, seed);
    for (int h = 0; h < H; ++h)
      for (std::size_t i : s.folds[h]) counts[i][h] += 1.0;
  }
  const double p = 1.0 / H, sigma = std::sqrt(trials * p * (1 - p));
  for (const auto& row : counts)
    for (double c : row) CHECK(std::abs(c - trials * p) <= 3 * sigma);
}

TEST_CASE("robust_empirical_cov: closed cases and eigenvalue floor") {
  Eigen::MatrixXd fold(2, 2);
  fold << 1, 0, 0, 1;
  const auto L = robust_empirical_cov(fold, 0.0, 0.1);
  CHECK((L - 0.36 * Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-15);

  const auto Z = robust_empirical_cov(Eigen::MatrixXd::Zero(5, 3), 0.02, 0.1);
  CHECK((Z - 0.6 * 0.12 * Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-15);

  std::mt19937_64 gen(2);
  std::normal_distribution<double> g;
  for (int t = 0; t < 20; ++t) {
    Eigen::MatrixXd F(30, 4);
    for (int i = 0; i < 30 * 4; ++i) F(i / 4, i % 4) = g(gen) * 0.3;
    const auto M = robust_empirical_cov(F, 0.05, 0.01);
    CHECK((M - M.transpose()).norm() == 0.0);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
    CHECK(es.eigenvalues().minCoeff() >= 0.6 * 0.06 - 1e-12);
  }
}

TEST_CASE("covariance sandwich on clean Gaussian designs") {
  const int d = 3;
  const std::size_t n = 5000;
  const double lambda = d * std::log(n / 0.05);
  int holds = 0;
  for (std::uint64_t seed = 0; seed < 60; ++seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> g;
    Eigen::MatrixXd X(n, d);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(gen) / std::sqrt(double(d));
    holds += covariance_sandwich_holds(X, Eigen::MatrixXd::Identity(d, d) / d, lambda) ? 1 : 0;
  }
  CHECK(holds >= 57);
  // A grossly wrong population covariance breaks it.
  std::mt19937_64 gen(1);
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = g(gen);
  CHECK_FALSE(covariance_sandwich_holds(X, 0.01 * Eigen::MatrixXd::Identity(d, d), lambda));
}

TEST_CASE("bonus_paper: zero feature and identity covariance") {
  BonusConfig cfg;
  cfg.mode = BonusMode::paper;
  cfg.epsilon = 0.05;
  cfg.sigma = 0.5;
  cfg.rho = 2.0;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(3, 3);
  CHECK(bonus_paper(I, Eigen::VectorXd::Zero(3), cfg, 2, 500) == 0.0);
  const double M = paper_bonus_multiplier(cfg, 3, 2, 500);
  CHECK(bonus_paper(I, Eigen::VectorXd::Unit(3, 0), cfg, 2, 500) == doctest::Approx(M).epsilon(1e-14));

  // Multiplier assembled by hand: gamma = sigma + H/2, N = H * n_fold.
  const double H = 2, N = 1000, gamma = 1.5, lam = 1.0 * 3 * H * std::log(N / 0.05) / N;
  const double expect = (gamma * std::sqrt(H) * 3 / std::sqrt(N) + (gamma + 2 * H * 2.0) * std::sqrt(0.05) +
                         H * 2.0 * std::sqrt(lam)) *
                        2.0;
  CHECK(M == doctest::Approx(expect).epsilon(1e-14));
  cfg.conservative_gamma = true;
  CHECK(paper_bonus_multiplier(cfg, 3, 2, 500) > M);
}

TEST_CASE("bonus_lykouris: closed forms and tabular frequency") {
  const Eigen::MatrixXd L = 0.4 * Eigen::MatrixXd::Identity(2, 2);
  CHECK(bonus_lykouris(L, Eigen::VectorXd::Zero(2), 3, 0.1) == 0.0);
  CHECK(bonus_lykouris(L, Eigen::VectorXd::Unit(2, 0), 3, 0.1) == doctest::Approx(3 * 0.1 / 0.4));

  // One-hot features: Lambda is diagonal in the regularized frequencies.
  const int pairs = 4;
  const std::vector<int> counts{10, 30, 0, 60};
  Eigen::MatrixXd F(100, pairs);
  F.setZero();
  int row = 0;
  for (int j = 0; j < pairs; ++j)
    for (int c = 0; c < counts[j]; ++c) F(row++, j) = 1.0;
  const double eps = 0.05, lambda = 0.01;
  const auto Lh = robust_empirical_cov(F, eps, lambda);
  for (int j = 0; j < pairs; ++j) {
    const double nu_hat = 0.6 * (counts[j] / 100.0 + eps + lambda);
    CHECK(bonus_lykouris(Lh, Eigen::VectorXd::Unit(pairs, j), 2, eps) == doctest::Approx(2 * eps / nu_hat));
  }
}

TEST_CASE("run_rlsvi: noiseless bandit returns the optimal arm") {
  Eigen::MatrixXd P = Eigen::MatrixXd::Ones(3, 1);
  Eigen::MatrixXd r(1, 3);
  r << 0.2, 0.7, 0.4;
  const auto m = tabular_embed(P, r, 1, 0.0, Eigen::VectorXd::Ones(1));
  const auto data = collect_clean(m, OfflineDistribution::uniform(3), 300, 1);
  const auto run = run_rlsvi(data.view(), FeatureMap::of(m), 1, OracleSettings{}, 0.0, BonusConfig{}, 2);
  CHECK(run.policy(0, 0) == 1);
  CHECK(run.q_hat[0](0, 1) == doctest::Approx(0.7).epsilon(1e-6));
}

TEST_CASE("run_rlsvi: clean data at N=1e5 is near optimal") {
  const auto m = demo_chain_mdp();
  const auto opt = exact_optimal(m).policy;
  std::vector<double> sub;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto data = collect_clean(m, OfflineDistribution::uniform(6), 100000, seed);
    const auto run = run_rlsvi(data.view(), FeatureMap::of(m), m.horizon, OracleSettings{}, 0.0, BonusConfig{}, seed);
    sub.push_back(suboptimality(m, run.policy, opt));
  }
  CHECK(median(sub) <= 0.05 * m.horizon);
}

TEST_CASE("run_rlsvi: clipping, learner isolation, monotone pessimism") {
  const auto m = random_tabular_mdp(3, 2, 3, 0.5, 3);
  const auto clean = collect_clean(m, OfflineDistribution::uniform(6), 3000, 4);
  auto attacked = apply_attack(clean, random_corruption(clean, 0.05, 3, 5));
  const auto cfg = paper_bonus(m, 0.05);
  const auto run = run_rlsvi(attacked.view(), FeatureMap::of(m), 3, OracleSettings{}, 0.05, cfg, 6);
  for (int h = 0; h < 3; ++h) {
    CHECK(run.q_hat[h].minCoeff() >= 0.0);
    CHECK(run.q_hat[h].maxCoeff() <= 3 - h);
  }

  Dataset stripped = attacked;
  stripped.corrupted_mask.assign(stripped.size(), false);
  const auto again = run_rlsvi(stripped.view(), FeatureMap::of(m), 3, OracleSettings{}, 0.05, cfg, 6);
  CHECK(again.policy == run.policy);
  for (int h = 0; h < 3; ++h) CHECK(again.q_hat[h] == run.q_hat[h]);

  // Least squares on one-hot features is monotone in the targets, so a larger
  // bonus can only lower every later-step target.
  OracleSettings ols;
  ols.kind = EstimatorKind::ols;
  BonusConfig small = cfg, large = cfg;
  small.constants.c2 = 0.0001;
  large.constants.c2 = 0.01;
  const auto qs = run_rlsvi(attacked.view(), FeatureMap::of(m), 3, ols, 0.05, small, 6);
  const auto ql = run_rlsvi(attacked.view(), FeatureMap::of(m), 3, ols, 0.05, large, 6);
  for (int h = 0; h < 3; ++h) CHECK((ql.q_hat[h].array() <= qs.q_hat[h].array() + 1e-12).all());
}

TEST_CASE("run_rlsvi: bonus validity and the pessimism bound") {
  const auto m = demo_chain_mdp();
  const auto opt = exact_optimal(m).policy;
  int valid = 0;
  const int seeds = 50;
  for (int seed = 0; seed < seeds; ++seed) {
    const auto clean = collect_clean(m, OfflineDistribution::uniform(6), 5000, seed);
    const auto data = apply_attack(clean, value_poison_attack(m, clean, 0.02, {0, 1}, 1.0));
    const auto run = run_rlsvi(data.view(), FeatureMap::of(m), m.horizon, OracleSettings{}, 0.02,
                               paper_bonus(m, 0.02), seed);
    if (bellman_validity_margin(m, run) <= 0.0) {
      ++valid;
      CHECK(suboptimality(m, run.policy, opt) <= pessimism_bound(m, run, opt) + 1e-12);
    }
  }
  CHECK(valid >= 0.95 * seeds);
}

TEST_CASE("distribution shift bound on small MDPs") {
  std::mt19937_64 gen(4);
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto m = random_simplex_mdp(4, 2, 3, 2, 0.3, seed);
    const auto pi = exact_optimal(m).policy;
    OfflineDistribution nu = OfflineDistribution::uniform(8);
    const double kappa = relative_condition_number(covariance(m, occupancy(m, pi)), covariance(m, nu));
    const auto data = collect_clean(m, nu, 4000, seed);
    const auto split = split_dataset(data.size(), m.horizon, seed);
    for (int h = 0; h < m.horizon; ++h) {
      Eigen::MatrixXd F(split.folds[h].size(), m.dim());
      for (std::size_t i = 0; i < split.folds[h].size(); ++i) {
        const auto& t = data.tuples[split.folds[h][i]];
        F.row(static_cast<Eigen::Index>(i)) = m.phi(t.state, t.action);
      }
      BonusConfig b;
      const double lam = regularization_lambda(b, m.dim(), m.horizon, data.size());
      const auto L = robust_empirical_cov(F, 0.0, lam);
      const auto dh = occupancy_by_step(m, pi)[h];
      double e = 0.0;
      for (int i = 0; i < 8; ++i) {
        const Eigen::VectorXd phi = m.features.row(i).transpose();
        e += dh(i) * std::sqrt(phi.dot(L.ldlt().solve(phi)));
      }
      CHECK(e <= std::sqrt(5.0 * m.dim() * kappa));
    }
  }
}

TEST_CASE("value dump CSV") {
  const auto m = demo_chain_mdp();
  const auto data = collect_clean(m, OfflineDistribution::uniform(6), 200, 1);
  const auto run = run_rlsvi(data.view(), FeatureMap::of(m), 2, OracleSettings{}, 0.0, BonusConfig{}, 1);
  const auto csv = value_dump_csv(run);
  CHECK(csv.rfind("h,s,a,q_hat,gamma\n1,0,0,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 2 * 6);
}
