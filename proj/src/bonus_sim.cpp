#include "corrl/bonus_sim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "corrl/adversary.hpp"
#include "corrl/rng.hpp"

namespace corrl {

std::vector<double> SweepConfig::default_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 12; ++i) grid.push_back(std::pow(10.0, -0.5 * i));
  return grid;
}

void SweepConfig::check() const {
  if (dim < 1) throw std::invalid_argument("SweepConfig: dim must be positive");
  if (n_train == 0 || test_points == 0) throw std::invalid_argument("SweepConfig: sample sizes must be positive");
  if (!(epsilon >= 0.0 && epsilon < 1.0)) throw std::invalid_argument("SweepConfig: epsilon must lie in [0, 1)");
  if (horizon < 1) throw std::invalid_argument("SweepConfig: horizon must be positive");
  if (!(ridge > 0.0)) throw std::invalid_argument("SweepConfig: ridge must be positive");
  if (lambda_min_grid.empty()) throw std::invalid_argument("SweepConfig: empty lambda_min grid");
  for (std::size_t i = 0; i < lambda_min_grid.size(); ++i) {
    if (!(lambda_min_grid[i] > 0.0)) throw std::invalid_argument("SweepConfig: grid must be strictly positive");
    if (i > 0 && !(lambda_min_grid[i] < lambda_min_grid[i - 1])) {
      throw std::invalid_argument("SweepConfig: grid must be strictly descending");
    }
  }
}

Eigen::MatrixXd sample_truncated_gaussian(int dim, const Eigen::VectorXd& eigenvalues, std::size_t n,
                                          std::uint64_t seed) {
  if (dim < 1 || eigenvalues.size() != dim) throw std::invalid_argument("sample_truncated_gaussian: bad dimension");
  if ((eigenvalues.array() <= 0.0).any()) throw std::invalid_argument("sample_truncated_gaussian: eigenvalues must be positive");
  const Eigen::ArrayXd scale = eigenvalues.array().sqrt();
  Rng rng(seed);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), dim);
  Eigen::ArrayXd x(dim);
  std::size_t attempts = 0;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    while (true) {
      for (int j = 0; j < dim; ++j) x(j) = scale(j) * rng.normal();
      ++attempts;
      if (x.matrix().squaredNorm() <= 1.0) break;
      // Checked after a warm-up so that a few unlucky early draws do not abort.
      if (attempts >= 100000 && static_cast<double>(i) < 1e-4 * static_cast<double>(attempts)) {
        throw std::runtime_error(
            "sample_truncated_gaussian: acceptance rate below 1e-4; shrink the eigenvalues");
      }
    }
    out.row(i) = x.matrix().transpose();
  }
  return out;
}

Eigen::MatrixXd sweep_covariance(const Eigen::MatrixXd& train, double ridge) {
  Eigen::MatrixXd lambda = train.transpose() * train;
  lambda.diagonal().array() += ridge;
  return lambda / static_cast<double>(train.rows());
}

double max_possible_gap_from_direction(const Eigen::VectorXd& direction, const Eigen::MatrixXd& train,
                                       double epsilon, int horizon) {
  const std::size_t n = static_cast<std::size_t>(train.rows());
  const std::size_t k = std::min(corruption_budget(epsilon, n), n);
  if (k == 0) return 0.0;
  Eigen::VectorXd c = (train * direction).cwiseAbs() / static_cast<double>(n);
  std::vector<double> v(c.data(), c.data() + c.size());
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(k - 1), v.end(), std::greater<>());
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) total += v[i];
  return 2.0 * horizon * total;
}

double max_possible_gap(const Eigen::VectorXd& test_phi, const Eigen::MatrixXd& train, const Eigen::MatrixXd& lambda,
                        double epsilon, int horizon) {
  Eigen::LLT<Eigen::MatrixXd> llt(lambda);
  if (llt.info() != Eigen::Success) throw std::invalid_argument("max_possible_gap: Lambda must be positive definite");
  return max_possible_gap_from_direction(llt.solve(test_phi), train, epsilon, horizon);
}

std::vector<SweepRow> run_bonus_sweep(const SweepConfig& cfg) {
  cfg.check();
  std::vector<SweepRow> rows;
  const double H = cfg.horizon;
  for (std::size_t g = 0; g < cfg.lambda_min_grid.size(); ++g) {
    const double lmin = cfg.lambda_min_grid[g];
    Eigen::VectorXd eig = Eigen::VectorXd::Ones(cfg.dim);
    eig(cfg.dim - 1) = lmin;
    const Eigen::MatrixXd train = sample_truncated_gaussian(cfg.dim, eig, cfg.n_train, derive_seed(cfg.seed, 2 * g));
    const Eigen::MatrixXd test =
        sample_truncated_gaussian(cfg.dim, eig, cfg.test_points, derive_seed(cfg.seed, 2 * g + 1));
    Eigen::LLT<Eigen::MatrixXd> llt(sweep_covariance(train, cfg.ridge));

    double gap = 0.0, b1 = 0.0, b2 = 0.0;
    for (Eigen::Index t = 0; t < test.rows(); ++t) {
      const Eigen::VectorXd phi = test.row(t).transpose();
      const Eigen::VectorXd dir = llt.solve(phi);
      gap += max_possible_gap_from_direction(dir, train, cfg.epsilon, cfg.horizon);
      b1 += H * cfg.epsilon * dir.norm();
      b2 += H * std::sqrt(cfg.epsilon) * std::sqrt(std::max(0.0, phi.dot(dir)));
    }
    const double m = static_cast<double>(test.rows());
    rows.push_back({lmin, -std::log(lmin), gap / m, b1 / m, b2 / m});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os.precision(17);
  os << "neg_log_lambda_min,mean_max_gap,mean_bonus1,mean_bonus2\n";
  for (const auto& r : rows) {
    os << r.neg_log_lambda_min << ',' << r.mean_max_gap << ',' << r.mean_bonus1 << ',' << r.mean_bonus2 << '\n';
  }
  return os.str();
}

std::string sweep_svg(const std::vector<SweepRow>& rows) {
  constexpr double width = 640, height = 420, left = 70, right = 160, top = 20, bottom = 50;
  double xmin = 0, xmax = 1, ymin = 1e300, ymax = -1e300;
  if (!rows.empty()) {
    xmin = rows.front().neg_log_lambda_min;
    xmax = rows.back().neg_log_lambda_min;
    if (xmax <= xmin) xmax = xmin + 1;
  }
  auto track = [&](double v) {
    if (v > 0.0) {
      ymin = std::min(ymin, std::log10(v));
      ymax = std::max(ymax, std::log10(v));
    }
  };
  for (const auto& r : rows) {
    track(r.mean_max_gap);
    track(r.mean_bonus1);
    track(r.mean_bonus2);
  }
  if (ymin > ymax) ymin = -1, ymax = 0;
  ymin = std::floor(ymin);
  ymax = std::max(std::ceil(ymax), ymin + 1);
  const double pw = width - left - right, ph = height - top - bottom;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double y) { return top + (ymax - y) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top + ph << "\" x2=\"" << left + pw << "\" y2=\"" << top + ph
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + ph
     << "\" stroke=\"black\"/>\n";
  for (double e = ymin; e <= ymax + 1e-9; e += 1.0) {
    os << "<text x=\"" << left - 8 << "\" y=\"" << py(e) + 4 << "\" font-size=\"11\" text-anchor=\"end\">1e" << e
       << "</text>\n";
  }
  for (const auto& r : rows) {
    os << "<text x=\"" << px(r.neg_log_lambda_min) << "\" y=\"" << top + ph + 16
       << "\" font-size=\"10\" text-anchor=\"middle\">" << std::round(r.neg_log_lambda_min * 10) / 10 << "</text>\n";
  }
  os << "<text x=\"" << left + pw / 2 << "\" y=\"" << height - 10
     << "\" font-size=\"12\" text-anchor=\"middle\">-log(lambda_min)</text>\n";

  struct Series {
    const char* name;
    const char* color;
    double SweepRow::*field;
  };
  const Series series[] = {{"max possible gap", "black", &SweepRow::mean_max_gap},
                           {"bonus 1", "crimson", &SweepRow::mean_bonus1},
                           {"bonus 2", "steelblue", &SweepRow::mean_bonus2}};
  int slot = 0;
  for (const auto& s : series) {
    os << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : rows) {
      const double v = r.*(s.field);
      if (v > 0.0) os << px(r.neg_log_lambda_min) << ',' << py(std::log10(v)) << ' ';
    }
    os << "\"/>\n";
    const double ly = top + 20 + 20 * slot++;
    os << "<line x1=\"" << left + pw + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + pw + 40 << "\" y2=\"" << ly
       << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + pw + 45 << "\" y=\"" << ly + 4 << "\" font-size=\"11\">" << s.name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace corrl
