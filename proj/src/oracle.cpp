#include "corrl/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "corrl/adversary.hpp"
#include "corrl/rng.hpp"

namespace corrl {

std::string to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::ols: return "ols";
    case EstimatorKind::trimmed: return "trimmed";
    case EstimatorKind::huber: return "huber";
  }
  return "ols";
}

EstimatorKind parse_estimator(const std::string& name) {
  if (name == "ols") return EstimatorKind::ols;
  if (name == "trimmed") return EstimatorKind::trimmed;
  if (name == "huber") return EstimatorKind::huber;
  throw std::invalid_argument("unknown estimator: " + name);
}

namespace {

void check_problem(const RegressionProblem& p) {
  if (p.X.rows() != p.y.size()) throw std::invalid_argument("RegressionProblem: X and y differ in length");
  if (p.X.cols() == 0) throw std::invalid_argument("RegressionProblem: zero-dimensional design");
  if (!(p.epsilon >= 0.0 && p.epsilon < 0.5)) throw std::invalid_argument("RegressionProblem: epsilon must lie in [0, 1/2)");
}

/// Solves (X^T W X + ridge I) w = X^T W y.
Eigen::VectorXd weighted_solve(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::VectorXd& weights,
                               double ridge) {
  const auto d = X.cols();
  Eigen::MatrixXd gram = X.transpose() * weights.asDiagonal() * X;
  gram.diagonal().array() += ridge;
  const Eigen::VectorXd rhs = X.transpose() * weights.cwiseProduct(y);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const Eigen::VectorXd pivots = ldlt.vectorD();
  const double scale = std::max(gram.diagonal().cwiseAbs().maxCoeff(), 1e-300);
  if (ldlt.info() != Eigen::Success || pivots.minCoeff() <= 1e-12 * scale || d == 0) {
    throw OracleFailure("singular normal equations");
  }
  return ldlt.solve(rhs);
}

}  // namespace

OracleFit fit_ols_ridge(const RegressionProblem& problem, double ridge) {
  check_problem(problem);
  if (ridge < 0.0) throw std::invalid_argument("fit_ols_ridge: ridge must be nonnegative");
  OracleFit fit;
  fit.w_hat = weighted_solve(problem.X, problem.y, Eigen::VectorXd::Ones(problem.X.rows()), ridge);
  fit.iterations = 1;
  return fit;
}

OracleFit fit_trimmed(const RegressionProblem& problem, int max_iters, double ridge) {
  check_problem(problem);
  const std::size_t n = problem.size();
  const std::size_t k = corruption_ceiling(problem.epsilon, n);
  if (n < k + static_cast<std::size_t>(problem.dim())) throw OracleFailure("insufficient inliers");

  Eigen::VectorXd active = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> order(n);
  OracleFit fit;
  fit.converged = false;
  for (int it = 0; it < std::max(1, max_iters); ++it) {
    fit.w_hat = weighted_solve(problem.X, problem.y, active, ridge);
    fit.iterations = it + 1;
    if (k == 0) {
      fit.converged = true;
      break;
    }
    const Eigen::VectorXd resid = (problem.y - problem.X * fit.w_hat).cwiseAbs();
    std::iota(order.begin(), order.end(), std::size_t{0});
    auto larger = [&](std::size_t a, std::size_t b) {
      const double ra = resid(static_cast<Eigen::Index>(a)), rb = resid(static_cast<Eigen::Index>(b));
      return ra > rb || (ra == rb && a < b);
    };
    std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k - 1), order.end(), larger);
    Eigen::VectorXd next = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n));
    for (std::size_t j = 0; j < k; ++j) next(static_cast<Eigen::Index>(order[j])) = 0.0;
    if (next == active) {
      fit.converged = true;
      break;
    }
    active = std::move(next);
  }
  // The reported fit always corresponds to the final active set.
  if (!fit.converged) fit.w_hat = weighted_solve(problem.X, problem.y, active, ridge);
  for (std::size_t i = 0; i < n; ++i) {
    if (active(static_cast<Eigen::Index>(i)) == 0.0) fit.trimmed_indices.push_back(i);
  }
  return fit;
}

double huber_objective(const RegressionProblem& problem, const Eigen::VectorXd& w, double huber_delta, double ridge) {
  const Eigen::VectorXd resid = problem.y - problem.X * w;
  double total = 0.5 * ridge * w.squaredNorm();
  for (Eigen::Index i = 0; i < resid.size(); ++i) {
    const double r = std::abs(resid(i));
    total += r <= huber_delta ? 0.5 * r * r : huber_delta * (r - 0.5 * huber_delta);
  }
  return total;
}

OracleFit fit_huber(const RegressionProblem& problem, double huber_delta, int max_iters, double tol, double ridge) {
  check_problem(problem);
  if (!(huber_delta > 0.0)) throw std::invalid_argument("fit_huber: huber_delta must be positive");
  const auto n = problem.X.rows();
  OracleFit fit;
  fit.w_hat = weighted_solve(problem.X, problem.y, Eigen::VectorXd::Ones(n), ridge);
  fit.converged = false;
  Eigen::VectorXd weights(n);
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd resid = problem.y - problem.X * fit.w_hat;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double r = std::abs(resid(i));
      weights(i) = r <= huber_delta ? 1.0 : huber_delta / r;
    }
    Eigen::VectorXd next = weighted_solve(problem.X, problem.y, weights, ridge);
    const double step = (next - fit.w_hat).norm();
    fit.w_hat = std::move(next);
    fit.iterations = it + 1;
    if (step < tol) {
      fit.converged = true;
      break;
    }
  }
  return fit;
}

OracleFit fit(const OracleSettings& settings, const RegressionProblem& problem) {
  const double ridge = settings.ridge_scale * static_cast<double>(problem.size());
  switch (settings.kind) {
    case EstimatorKind::ols: return fit_ols_ridge(problem, ridge);
    case EstimatorKind::trimmed: return fit_trimmed(problem, settings.max_iters, ridge);
    case EstimatorKind::huber: return fit_huber(problem, settings.huber_delta, settings.max_iters, settings.tol, ridge);
  }
  throw std::invalid_argument("unknown estimator");
}

RegressionProblem sample_problem(const RegressionDesign& design, double epsilon, std::size_t n, std::uint64_t seed,
                                 std::vector<std::size_t>* corrupted) {
  if (design.w_star.size() != design.dim) throw std::invalid_argument("RegressionDesign: w_star has the wrong length");
  Rng rng(seed);
  RegressionProblem p;
  p.X.resize(static_cast<Eigen::Index>(n), design.dim);
  p.y.resize(static_cast<Eigen::Index>(n));
  p.epsilon = epsilon;
  p.noise_scale = design.noise_sigma;
  for (Eigen::Index i = 0; i < static_cast<Eigen::Index>(n); ++i) {
    Eigen::VectorXd g(design.dim);
    do {
      for (int j = 0; j < design.dim; ++j) g(j) = rng.normal();
    } while (g.norm() == 0.0);
    p.X.row(i) = g.transpose() / g.norm();
    p.y(i) = p.X.row(i).dot(design.w_star) + design.noise_sigma * rng.normal();
  }
  const std::size_t budget = corruption_budget(epsilon, n);
  if (corrupted) corrupted->clear();
  if (design.attack == DesignAttack::shift && budget > 0) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return p.X(static_cast<Eigen::Index>(a), 0) > p.X(static_cast<Eigen::Index>(b), 0);
    });
    order.resize(budget);
    std::sort(order.begin(), order.end());
    for (std::size_t i : order) p.y(static_cast<Eigen::Index>(i)) += design.attack_magnitude;
    if (corrupted) *corrupted = order;
  }
  return p;
}

namespace {

double percentile95(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(v.size())));
  return v[std::max<std::size_t>(rank, 1) - 1];
}

template <class ErrorFn, class BoundFn>
std::vector<BoundCell> bound_grid(const OracleSettings& estimator, const RegressionDesign& design,
                                  const std::vector<double>& eps_grid, const std::vector<std::size_t>& n_grid,
                                  int trials, std::uint64_t seed, ErrorFn error, BoundFn bound) {
  std::vector<BoundCell> cells;
  std::uint64_t cell_id = 0;
  for (double eps : eps_grid) {
    for (std::size_t n : n_grid) {
      std::vector<double> errors;
      errors.reserve(static_cast<std::size_t>(trials));
      for (int t = 0; t < trials; ++t) {
        const auto s = derive_seed(derive_seed(seed, cell_id), static_cast<std::uint64_t>(t));
        RegressionProblem p = sample_problem(design, eps, n, s);
        errors.push_back(error(fit(estimator, p).w_hat - design.w_star));
      }
      BoundCell cell;
      cell.epsilon = eps;
      cell.n = n;
      cell.p95_error = percentile95(std::move(errors));
      cell.bound = bound(eps, static_cast<double>(n));
      cell.violation = cell.p95_error > cell.bound;
      cells.push_back(cell);
      ++cell_id;
    }
  }
  return cells;
}

}  // namespace

std::vector<BoundCell> check_oracle_bound_param(const OracleSettings& estimator, const RegressionDesign& design,
                                                const std::vector<double>& eps_grid,
                                                const std::vector<std::size_t>& n_grid, int trials,
                                                std::uint64_t seed, const OracleConstants& constants) {
  const double gamma = design.noise_sigma;
  const double xi = design.xi();
  const double poly = std::pow(static_cast<double>(design.dim), constants.poly_d_exponent);
  return bound_grid(
      estimator, design, eps_grid, n_grid, trials, seed, [](const Eigen::VectorXd& e) { return e.norm(); },
      [&](double eps, double n) {
        return constants.c1 * (std::sqrt(gamma * gamma * poly / (xi * xi * n)) + gamma * eps / xi);
      });
}

std::vector<BoundCell> check_oracle_bound_pred(const OracleSettings& estimator, const RegressionDesign& design,
                                               const std::vector<double>& eps_grid,
                                               const std::vector<std::size_t>& n_grid, int trials,
                                               std::uint64_t seed, const OracleConstants& constants) {
  const double gamma = design.noise_sigma;
  const double poly = std::pow(static_cast<double>(design.dim), constants.poly_d_exponent);
  const Eigen::MatrixXd sigma = design.covariance();
  return bound_grid(
      estimator, design, eps_grid, n_grid, trials, seed,
      [&](const Eigen::VectorXd& e) { return e.dot(sigma * e); },
      [&](double eps, double n) { return constants.c2 * (gamma * gamma * poly / n + gamma * gamma * eps); });
}

std::string bound_report_csv(const std::vector<BoundCell>& cells) {
  std::ostringstream os;
  os.precision(17);
  os << "epsilon,N,p95_error,bound,violation\n";
  for (const auto& c : cells) {
    os << c.epsilon << ',' << c.n << ',' << c.p95_error << ',' << c.bound << ',' << (c.violation ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace corrl
