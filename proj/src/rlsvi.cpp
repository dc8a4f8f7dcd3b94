#include "corrl/rlsvi.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "corrl/rng.hpp"

namespace corrl {

std::string to_string(BonusMode mode) {
  switch (mode) {
    case BonusMode::none: return "none";
    case BonusMode::paper: return "paper";
    case BonusMode::lykouris: return "lykouris";
  }
  return "none";
}

BonusMode parse_bonus_mode(const std::string& name) {
  if (name == "none") return BonusMode::none;
  if (name == "paper") return BonusMode::paper;
  if (name == "lykouris") return BonusMode::lykouris;
  throw std::invalid_argument("unknown bonus mode: " + name);
}

FoldSplit split_dataset(std::size_t n, int horizon, std::uint64_t seed) {
  if (horizon <= 0) throw std::invalid_argument("split_dataset: horizon must be positive");
  const auto H = static_cast<std::size_t>(horizon);
  if (n < H) throw std::invalid_argument("split_dataset: need at least H tuples");
  Rng rng(seed);
  const std::vector<std::size_t> perm = random_permutation(n, rng);
  const std::size_t per_fold = n / H;
  FoldSplit split;
  split.folds.resize(H);
  for (std::size_t h = 0; h < H; ++h) {
    split.folds[h].assign(perm.begin() + static_cast<std::ptrdiff_t>(h * per_fold),
                          perm.begin() + static_cast<std::ptrdiff_t>((h + 1) * per_fold));
  }
  split.dropped = n - per_fold * H;
  return split;
}

double regularization_lambda(const BonusConfig& cfg, int d, int horizon, std::size_t n_total) {
  const double n = static_cast<double>(n_total);
  return cfg.lambda_const * d * horizon * std::log(n / cfg.delta) / n;
}

Eigen::MatrixXd robust_empirical_cov(const Eigen::MatrixXd& fold_features, double epsilon, double lambda) {
  const auto d = fold_features.cols();
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
  if (fold_features.rows() > 0) {
    cov = fold_features.transpose() * fold_features / static_cast<double>(fold_features.rows());
  }
  cov.diagonal().array() += epsilon + lambda;
  return 0.6 * cov;
}

double paper_bonus_multiplier(const BonusConfig& cfg, int d, int horizon, std::size_t n_fold) {
  const double H = horizon;
  const double gamma = cfg.sigma + (cfg.conservative_gamma ? H : H / 2.0);
  const std::size_t n_total = n_fold * static_cast<std::size_t>(horizon);
  const double lambda = regularization_lambda(cfg, d, horizon, n_total);
  const double poly = std::pow(static_cast<double>(d), cfg.constants.poly_d_exponent);
  const double term = gamma * std::sqrt(H) * poly / std::sqrt(static_cast<double>(n_total)) +
                      (gamma + 2.0 * H * cfg.rho) * std::sqrt(cfg.epsilon) + H * cfg.rho * std::sqrt(lambda);
  return term * std::sqrt(cfg.constants.c2);
}

double bonus_paper(const Eigen::MatrixXd& lambda_h, const Eigen::VectorXd& phi, const BonusConfig& cfg, int horizon,
                   std::size_t n_fold) {
  if (phi.isZero(0.0)) return 0.0;
  const double quad = phi.dot(lambda_h.llt().solve(phi));
  return paper_bonus_multiplier(cfg, static_cast<int>(phi.size()), horizon, n_fold) * std::sqrt(std::max(0.0, quad));
}

double bonus_lykouris(const Eigen::MatrixXd& lambda_h, const Eigen::VectorXd& phi, int horizon, double epsilon) {
  return horizon * epsilon * lambda_h.llt().solve(phi).norm();
}

RlsviRun run_rlsvi(std::span<const Transition> data, const FeatureMap& fmap, int horizon,
                   const OracleSettings& oracle, double oracle_epsilon, const BonusConfig& bonus,
                   std::uint64_t seed) {
  if (data.empty()) throw std::invalid_argument("run_rlsvi: empty dataset");
  const int S = fmap.num_states, A = fmap.num_actions, H = horizon, d = fmap.dim();
  if (fmap.features.rows() != S * A) throw std::invalid_argument("run_rlsvi: feature map has the wrong shape");

  const FoldSplit split = split_dataset(data.size(), H, seed);
  RlsviRun run;
  run.n_total = data.size();
  run.dropped = split.dropped;
  run.lambda = regularization_lambda(bonus, d, H, data.size());
  run.v_hat = Eigen::MatrixXd::Zero(H + 1, S);
  run.w_hats.resize(static_cast<std::size_t>(H));
  run.q_raw.resize(static_cast<std::size_t>(H));
  run.q_hat.resize(static_cast<std::size_t>(H));
  run.gamma.resize(static_cast<std::size_t>(H));
  run.folds.resize(static_cast<std::size_t>(H));
  run.bonus_stats.resize(static_cast<std::size_t>(H));
  run.policy = PolicyTable(H, S);
  const double gamma_noise = bonus.sigma + H / 2.0;

  for (int h = H - 1; h >= 0; --h) {
    const auto hs = static_cast<std::size_t>(h);
    const auto& fold = split.folds[hs];
    const auto n_h = static_cast<Eigen::Index>(fold.size());
    RegressionProblem problem;
    problem.X.resize(n_h, d);
    problem.y.resize(n_h);
    problem.epsilon = oracle_epsilon;
    problem.noise_scale = gamma_noise;
    for (Eigen::Index i = 0; i < n_h; ++i) {
      const Transition& t = data[fold[static_cast<std::size_t>(i)]];
      if (t.state < 0 || t.state >= S || t.action < 0 || t.action >= A || t.next_state < 0 || t.next_state >= S) {
        throw std::invalid_argument("run_rlsvi: tuple references an unknown state or action");
      }
      problem.X.row(i) = fmap.phi(t.state, t.action);
      problem.y(i) = t.reward + run.v_hat(h + 1, t.next_state);
    }

    OracleFit f;
    try {
      f = fit(oracle, problem);
    } catch (const OracleFailure& e) {
      throw OracleFailure("oracle failed on fold " + std::to_string(h + 1) + ": " + e.what());
    }
    run.folds[hs] = {fold.size(), f.iterations, f.converged, f.trimmed_indices.size()};

    Eigen::LLT<Eigen::MatrixXd> lambda_llt;
    double multiplier = 0.0;
    if (bonus.mode != BonusMode::none) {
      lambda_llt.compute(robust_empirical_cov(problem.X, bonus.epsilon, run.lambda));
      if (bonus.mode == BonusMode::paper) multiplier = paper_bonus_multiplier(bonus, d, H, fold.size());
    }

    Eigen::MatrixXd raw(S, A), gam = Eigen::MatrixXd::Zero(S, A), q(S, A);
    const double upper = H - h;
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) {
        const Eigen::VectorXd phi = fmap.phi(s, a).transpose();
        raw(s, a) = phi.dot(f.w_hat);
        if (bonus.mode == BonusMode::paper) {
          gam(s, a) = phi.isZero(0.0) ? 0.0 : multiplier * std::sqrt(std::max(0.0, phi.dot(lambda_llt.solve(phi))));
        } else if (bonus.mode == BonusMode::lykouris) {
          gam(s, a) = H * bonus.epsilon * lambda_llt.solve(phi).norm();
        }
        q(s, a) = std::clamp(raw(s, a) - gam(s, a), 0.0, upper);
      }
    }
    for (int s = 0; s < S; ++s) {
      int best = 0;
      for (int a = 1; a < A; ++a) {
        if (q(s, a) > q(s, best)) best = a;
      }
      run.policy(h, s) = best;
      run.v_hat(h, s) = q(s, best);
    }
    run.bonus_stats[hs] = {gam.mean(), gam.maxCoeff()};
    run.w_hats[hs] = std::move(f.w_hat);
    run.q_raw[hs] = std::move(raw);
    run.q_hat[hs] = std::move(q);
    run.gamma[hs] = std::move(gam);
  }
  return run;
}

double bellman_validity_margin(const LinearMdp& mdp, const RlsviRun& run) {
  const Eigen::MatrixXd P = transition_matrix(mdp);
  const Eigen::VectorXd r = mean_rewards(mdp);
  double margin = -std::numeric_limits<double>::infinity();
  for (int h = 0; h < mdp.horizon; ++h) {
    const auto hs = static_cast<std::size_t>(h);
    const Eigen::VectorXd backup = r + P * run.v_hat.row(h + 1).transpose();
    for (int s = 0; s < mdp.num_states; ++s) {
      for (int a = 0; a < mdp.num_actions; ++a) {
        const double err = std::abs(run.q_raw[hs](s, a) - backup(mdp.pair_index(s, a)));
        margin = std::max(margin, err - run.gamma[hs](s, a));
      }
    }
  }
  return margin;
}

double pessimism_bound(const LinearMdp& mdp, const RlsviRun& run, const PolicyTable& comparator) {
  const auto steps = occupancy_by_step(mdp, comparator);
  double total = 0.0;
  for (int h = 0; h < mdp.horizon; ++h) {
    const auto& dh = steps[static_cast<std::size_t>(h)];
    const auto& gam = run.gamma[static_cast<std::size_t>(h)];
    for (int s = 0; s < mdp.num_states; ++s) {
      for (int a = 0; a < mdp.num_actions; ++a) total += dh(mdp.pair_index(s, a)) * gam(s, a);
    }
  }
  return 2.0 * total;
}

Eigen::VectorXd best_linear_predictor(const LinearMdp& mdp, const Eigen::VectorXd& next_values) {
  return mdp.reward_param + mdp.measures.transpose() * next_values;
}

bool covariance_sandwich_holds(const Eigen::MatrixXd& samples, const Eigen::MatrixXd& population_cov, double lambda) {
  const double n = static_cast<double>(samples.rows());
  Eigen::MatrixXd gram = samples.transpose() * samples;
  gram.diagonal().array() += lambda;
  Eigen::MatrixXd target = n * population_cov;
  target.diagonal().array() += lambda;
  const Eigen::MatrixXd lower = gram - target / 3.0;
  const Eigen::MatrixXd upper = 5.0 * target / 3.0 - gram;
  auto min_eig = [](const Eigen::MatrixXd& m) {
    return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(0.5 * (m + m.transpose()), Eigen::EigenvaluesOnly)
        .eigenvalues()
        .minCoeff();
  };
  const double tol = 1e-9 * std::max(1.0, target.norm());
  return min_eig(lower) >= -tol && min_eig(upper) >= -tol;
}

std::string value_dump_csv(const RlsviRun& run) {
  std::ostringstream os;
  os.precision(17);
  os << "h,s,a,q_hat,gamma\n";
  for (std::size_t h = 0; h < run.q_hat.size(); ++h) {
    const auto& q = run.q_hat[h];
    for (Eigen::Index s = 0; s < q.rows(); ++s) {
      for (Eigen::Index a = 0; a < q.cols(); ++a) {
        os << h + 1 << ',' << s << ',' << a << ',' << q(s, a) << ',' << run.gamma[h](s, a) << '\n';
      }
    }
  }
  return os.str();
}

}  // namespace corrl
