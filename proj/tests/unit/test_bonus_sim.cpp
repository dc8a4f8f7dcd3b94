#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "corrl/adversary.hpp"
#include "corrl/bonus_sim.hpp"
#include "support/oracles.hpp"

using namespace corrl;

namespace {

Eigen::MatrixXd random_train(int n, int d, std::mt19937_64& gen) {
  std::normal_distribution<double> g;
  Eigen::MatrixXd X(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) X(i, j) = g(gen);
    X.row(i) /= std::max(1.0, X.row(i).norm());
  }
  return X;
}

}  // namespace

TEST_CASE("sample_truncated_gaussian: norm bound, moments, abort") {
  const auto X = sample_truncated_gaussian(3, Eigen::Vector3d(1.0, 1.0, 0.01), 20000, 1);
  CHECK(X.rowwise().norm().maxCoeff() <= 1.0);

  const std::size_t n = 100000;
  const double v = 1e-8;
  const auto tiny = sample_truncated_gaussian(3, Eigen::Vector3d::Constant(v), n, 2);
  for (int j = 0; j < 3; ++j) {
    const double mean = tiny.col(j).mean();
    const double var = tiny.col(j).squaredNorm() / n;
    CHECK(std::abs(mean) <= 3 * std::sqrt(v / n));
    CHECK(std::abs(var - v) <= 3 * std::sqrt(2 * v * v / n));
  }
  const double off = tiny.col(0).dot(tiny.col(1)) / n;
  CHECK(std::abs(off) <= 3 * std::sqrt(v * v / n));

  const auto iso = sample_truncated_gaussian(3, Eigen::Vector3d::Ones(), n, 3);
  for (int j = 0; j < 3; ++j) CHECK(std::abs(iso.col(j).mean()) <= 3 * std::sqrt(1.0 / n));

  CHECK_THROWS_AS(sample_truncated_gaussian(3, Eigen::Vector3d::Constant(1e4), 10, 4), std::runtime_error);
  CHECK_THROWS_AS(sample_truncated_gaussian(2, Eigen::Vector2d(1.0, 0.0), 10, 4), std::invalid_argument);
}

TEST_CASE("max_possible_gap: closed cases") {
  const Eigen::MatrixXd one = Eigen::MatrixXd::Ones(1, 1);
  CHECK(max_possible_gap(Eigen::VectorXd::Ones(1), one, one, 1.0, 1) == doctest::Approx(2.0));
  std::mt19937_64 gen(1);
  const auto X = random_train(20, 2, gen);
  CHECK(max_possible_gap(Eigen::Vector2d(0.3, 0.4), X, sweep_covariance(X, 1.0), 0.0, 1) == 0.0);
}

TEST_CASE("max_possible_gap: brute force over supports and signs") {
  std::mt19937_64 gen(7);
  for (int t = 0; t < 30; ++t) {
    const int n = 10;
    const auto X = random_train(n, 2, gen);
    const auto L = sweep_covariance(X, 1.0);
    const auto phi = random_train(1, 2, gen).row(0).transpose();
    for (int H : {1, 3}) {
      const double closed = max_possible_gap(phi, X, L, 0.2, H);
      CHECK(std::abs(closed - oracle::brute_force_gap(phi, X, L, 2, H)) < 1e-12);
    }
  }
}

TEST_CASE("property: gap dominance and monotonicity") {
  std::mt19937_64 gen(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int t = 0; t < 40; ++t) {
    const int n = 200;
    const auto X = random_train(n, 3, gen);
    const auto L = sweep_covariance(X, 1.0);
    const Eigen::VectorXd phi = random_train(1, 3, gen).row(0).transpose();
    const Eigen::VectorXd dir = L.ldlt().solve(phi);
    const double eps = 0.05;
    const int H = 2;
    const std::size_t k = corruption_budget(eps, n);
    const double gap = max_possible_gap(phi, X, L, eps, H);
    for (int attack = 0; attack < 20; ++attack) {
      Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
      for (std::size_t j = 0; j < k; ++j) y(static_cast<Eigen::Index>(gen() % n)) = 2.0 * H * u(gen);
      const double bias = dir.dot(X.transpose() * y) / n;
      CHECK(bias <= gap + 1e-12);
    }
    double prev = 0.0;
    for (double e : {0.0, 0.01, 0.02, 0.05, 0.1, 0.3}) {
      const double g = max_possible_gap(phi, X, L, e, H);
      CHECK(g >= prev - 1e-15);
      prev = g;
    }
    CHECK(max_possible_gap(phi, X, L, eps, 3) >= max_possible_gap(phi, X, L, eps, 2));
  }
}

TEST_CASE("run_bonus_sweep: orderings, zero epsilon, output formats") {
  SweepConfig cfg;
  cfg.n_train = 20000;
  cfg.test_points = 300;
  cfg.seed = 5;
  cfg.lambda_min_grid = {1.0, 1e-3, 1e-6};
  const auto rows = run_bonus_sweep(cfg);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].mean_bonus1 < rows[0].mean_bonus2);
  CHECK(rows[2].mean_bonus1 > rows[2].mean_bonus2);
  CHECK(rows[2].mean_bonus1 > rows[2].mean_max_gap);
  CHECK(rows[2].neg_log_lambda_min == doctest::Approx(6.0 * std::log(10.0)));
  CHECK(run_bonus_sweep(cfg).front().mean_bonus2 == rows.front().mean_bonus2);

  SweepConfig zero = cfg;
  zero.epsilon = 0.0;
  for (const auto& r : run_bonus_sweep(zero)) {
    CHECK(r.mean_max_gap == 0.0);
    CHECK(r.mean_bonus1 == 0.0);
  }

  const auto csv = sweep_csv(rows);
  CHECK(csv.rfind("neg_log_lambda_min,mean_max_gap,mean_bonus1,mean_bonus2\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);
  CHECK(sweep_svg(rows).find("<svg") != std::string::npos);

  SweepConfig bad = cfg;
  bad.lambda_min_grid = {1e-3, 1.0};
  CHECK_THROWS_AS(bad.check(), std::invalid_argument);
  CHECK(SweepConfig::default_grid().size() == 13);
  CHECK(SweepConfig().paper_scale().n_train == 1000000);
}
