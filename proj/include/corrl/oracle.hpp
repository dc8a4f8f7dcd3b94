#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace corrl {

/// Regression data (x_i, y_i) with ||x_i|| <= 1, an assumed contamination
/// fraction and the clean noise scale gamma.
struct RegressionProblem {
  Eigen::MatrixXd X;
  Eigen::VectorXd y;
  double epsilon = 0.0;
  double noise_scale = 1.0;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
};

struct OracleFit {
  Eigen::VectorXd w_hat;
  int iterations = 0;
  std::vector<std::size_t> trimmed_indices;
  bool converged = true;
};

/// Constants of the robust-regression error bounds; poly(d) = d^exponent.
struct OracleConstants {
  double c1 = 4.0;
  double c2 = 4.0;
  double poly_d_exponent = 1.0;
};

class OracleFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class EstimatorKind { ols, trimmed, huber };

std::string to_string(EstimatorKind kind);
EstimatorKind parse_estimator(const std::string& name);

struct OracleSettings {
  EstimatorKind kind = EstimatorKind::trimmed;
  int max_iters = 50;
  double huber_delta = 1.0;
  double tol = 1e-10;
  /// Ridge is ridge_scale * N.
  double ridge_scale = 1e-8;
};

/// argmin ||Xw - y||^2 + ridge ||w||^2. Throws OracleFailure when ridge == 0
/// and X^T X is singular.
OracleFit fit_ols_ridge(const RegressionProblem& problem, double ridge);

/// Iterative trimming: refit on all points except the ceil(eps N) largest
/// absolute residuals until the active set stops changing.
OracleFit fit_trimmed(const RegressionProblem& problem, int max_iters, double ridge);

/// Huber-loss M-estimate by iteratively reweighted least squares.
OracleFit fit_huber(const RegressionProblem& problem, double huber_delta, int max_iters, double tol, double ridge);

/// Sum of Huber losses of the residuals plus ridge ||w||^2 / 2 (the objective
/// fit_huber minimizes).
double huber_objective(const RegressionProblem& problem, const Eigen::VectorXd& w, double huber_delta, double ridge);

/// Dispatch on settings.kind. Ridge is settings.ridge_scale * N.
OracleFit fit(const OracleSettings& settings, const RegressionProblem& problem);

// ---------------------------------------------------------------------------
// Empirical checks of the oracle error contract.

enum class DesignAttack { none, shift };

/// Clean design x ~ uniform on the unit sphere (so E[xx^T] = I/d and
/// xi = 1/d), y = x^T w* + N(0, noise^2). The shift attack adds `magnitude`
/// to y on the floor(eps N) samples with the largest first coordinate.
struct RegressionDesign {
  int dim = 3;
  Eigen::VectorXd w_star;
  double noise_sigma = 0.1;
  DesignAttack attack = DesignAttack::shift;
  double attack_magnitude = 10.0;

  double xi() const { return 1.0 / dim; }
  Eigen::MatrixXd covariance() const { return Eigen::MatrixXd::Identity(dim, dim) / dim; }
};

/// Draws one contaminated problem; `corrupted` receives the attacked indices.
RegressionProblem sample_problem(const RegressionDesign& design, double epsilon, std::size_t n, std::uint64_t seed,
                                 std::vector<std::size_t>* corrupted = nullptr);

struct BoundCell {
  double epsilon = 0.0;
  std::size_t n = 0;
  double p95_error = 0.0;
  double bound = 0.0;
  bool violation = false;
};

/// 95th percentile of ||w_hat - w*|| per (eps, N) against
/// c1 (sqrt(gamma^2 poly(d) / (xi^2 N)) + gamma eps / xi).
std::vector<BoundCell> check_oracle_bound_param(const OracleSettings& estimator, const RegressionDesign& design,
                                                const std::vector<double>& eps_grid,
                                                const std::vector<std::size_t>& n_grid, int trials,
                                                std::uint64_t seed, const OracleConstants& constants = {});

/// 95th percentile of (w_hat - w*)^T Sigma (w_hat - w*) against
/// c2 (gamma^2 poly(d) / N + gamma^2 eps).
std::vector<BoundCell> check_oracle_bound_pred(const OracleSettings& estimator, const RegressionDesign& design,
                                               const std::vector<double>& eps_grid,
                                               const std::vector<std::size_t>& n_grid, int trials,
                                               std::uint64_t seed, const OracleConstants& constants = {});

/// CSV with header epsilon,N,p95_error,bound,violation.
std::string bound_report_csv(const std::vector<BoundCell>& cells);

}  // namespace corrl
