#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

namespace corrl {

/// Parameters of the bonus-size sweep. The defaults are the desk-scale
/// setting (N = 1e5); `paper_scale()` restores N = 1e6.
struct SweepConfig {
  int dim = 3;
  std::size_t n_train = 100000;
  double epsilon = 0.01;
  int horizon = 1;
  double ridge = 1.0;
  std::vector<double> lambda_min_grid;  // strictly positive, descending
  std::size_t test_points = 1000;
  std::uint64_t seed = 0;

  /// 13 log-spaced points from 1 down to 1e-6.
  static std::vector<double> default_grid();
  SweepConfig() : lambda_min_grid(default_grid()) {}
  SweepConfig& paper_scale() {
    n_train = 1000000;
    return *this;
  }
  void check() const;
};

/// n rows ~ N(0, diag(eigenvalues)) conditioned on ||x|| <= 1, by rejection.
/// Throws std::runtime_error when the acceptance rate falls below 1e-4.
Eigen::MatrixXd sample_truncated_gaussian(int dim, const Eigen::VectorXd& eigenvalues, std::size_t n,
                                          std::uint64_t seed);

/// Ridge covariance used by the sweep: (1/N)(Phi^T Phi + ridge I).
Eigen::MatrixXd sweep_covariance(const Eigen::MatrixXd& train, double ridge);

/// max over ||y||_inf <= 2H, ||y||_0 <= floor(eps N) of
/// phi^T Lambda^{-1} ((1/N) sum_i phi_i y_i), in closed form: 2H times the sum
/// of the floor(eps N) largest |phi^T Lambda^{-1} phi_i| / N.
double max_possible_gap(const Eigen::VectorXd& test_phi, const Eigen::MatrixXd& train, const Eigen::MatrixXd& lambda,
                        double epsilon, int horizon);

/// Same quantity when Lambda^{-1} test_phi has been computed already.
double max_possible_gap_from_direction(const Eigen::VectorXd& direction, const Eigen::MatrixXd& train,
                                       double epsilon, int horizon);

struct SweepRow {
  double lambda_min = 0.0;
  double neg_log_lambda_min = 0.0;
  double mean_max_gap = 0.0;
  double mean_bonus1 = 0.0;
  double mean_bonus2 = 0.0;
};

std::vector<SweepRow> run_bonus_sweep(const SweepConfig& cfg);

/// CSV with header neg_log_lambda_min,mean_max_gap,mean_bonus1,mean_bonus2.
std::string sweep_csv(const std::vector<SweepRow>& rows);

/// Line chart of the three series against -log(lambda_min) on a log y axis.
std::string sweep_svg(const std::vector<SweepRow>& rows);

}  // namespace corrl
