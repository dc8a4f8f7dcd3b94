#include "corrl/mdp.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace corrl {

namespace {

std::string pair_name(const LinearMdp& mdp, int row) {
  std::ostringstream os;
  os << "(s=" << row / mdp.num_actions << ",a=" << row % mdp.num_actions << ")";
  return os.str();
}

void check_shapes(const LinearMdp& mdp) {
  if (mdp.num_states <= 0 || mdp.num_actions <= 0 || mdp.horizon <= 0) {
    throw std::invalid_argument("LinearMdp: S, A and H must be positive");
  }
  const int d = mdp.dim();
  if (d <= 0 || mdp.features.rows() != mdp.num_pairs() || mdp.measures.rows() != mdp.num_states ||
      mdp.measures.cols() != d || mdp.reward_param.size() != d || mdp.init_dist.size() != mdp.num_states) {
    throw std::invalid_argument("LinearMdp: inconsistent array shapes");
  }
}

}  // namespace

std::string to_string(RewardNoise noise) {
  switch (noise) {
    case RewardNoise::gaussian: return "gaussian";
    case RewardNoise::uniform: return "uniform";
    case RewardNoise::bernoulli: return "bernoulli";
  }
  return "gaussian";
}

RewardNoise parse_reward_noise(const std::string& name) {
  if (name == "gaussian") return RewardNoise::gaussian;
  if (name == "uniform") return RewardNoise::uniform;
  if (name == "bernoulli") return RewardNoise::bernoulli;
  throw std::invalid_argument("unknown reward noise model: " + name);
}

Eigen::MatrixXd transition_matrix(const LinearMdp& mdp) { return mdp.features * mdp.measures.transpose(); }

Eigen::VectorXd mean_rewards(const LinearMdp& mdp) { return mdp.features * mdp.reward_param; }

std::vector<std::string> validate_mdp(const LinearMdp& mdp) {
  std::vector<std::string> out;
  try {
    check_shapes(mdp);
  } catch (const std::invalid_argument& e) {
    out.emplace_back(e.what());
    return out;
  }
  constexpr double kTol = 1e-12;
  const Eigen::MatrixXd P = transition_matrix(mdp);
  const Eigen::VectorXd r = mean_rewards(mdp);
  for (int row = 0; row < mdp.num_pairs(); ++row) {
    const double norm = mdp.features.row(row).norm();
    if (norm > 1.0 + kTol) {
      std::ostringstream os;
      os << "feature norm at " << pair_name(mdp, row) << " is " << norm << " > 1";
      out.push_back(os.str());
    }
    if (P.row(row).minCoeff() < -kTol) {
      out.push_back("transition at " + pair_name(mdp, row) + " has a negative probability");
    }
    const double total = P.row(row).sum();
    if (std::abs(total - 1.0) > 1e-9) {
      std::ostringstream os;
      os << "transition at " << pair_name(mdp, row) << " sums to " << total;
      out.push_back(os.str());
    }
    if (r(row) < -kTol || r(row) > 1.0 + kTol) {
      std::ostringstream os;
      os << "mean reward at " << pair_name(mdp, row) << " is " << r(row) << ", outside [0,1]";
      out.push_back(os.str());
    }
  }
  if (mdp.reward_param.norm() > mdp.param_bound * (1.0 + kTol)) {
    out.emplace_back("reward_param norm exceeds rho");
  }
  if (mdp.measures.colwise().sum().norm() > mdp.param_bound * (1.0 + kTol)) {
    out.emplace_back("measure column-sum norm exceeds rho");
  }
  if (mdp.init_dist.minCoeff() < 0.0 || std::abs(mdp.init_dist.sum() - 1.0) > 1e-9) {
    out.emplace_back("init_dist is not a probability vector");
  }
  if (mdp.noise_sigma < 0.0) out.emplace_back("noise_sigma is negative");
  return out;
}

LinearMdp tabular_embed(const Eigen::MatrixXd& transitions, const Eigen::MatrixXd& rewards, int horizon,
                        double noise_sigma, const Eigen::VectorXd& init_dist, RewardNoise noise) {
  const int S = static_cast<int>(rewards.rows());
  const int A = static_cast<int>(rewards.cols());
  if (S <= 0 || A <= 0 || transitions.rows() != S * A || transitions.cols() != S) {
    throw std::invalid_argument("tabular_embed: transitions must be (S*A) x S");
  }
  for (int row = 0; row < S * A; ++row) {
    if (transitions.row(row).minCoeff() < 0.0 || std::abs(transitions.row(row).sum() - 1.0) > 1e-9) {
      std::ostringstream os;
      os << "tabular_embed: transition row (s=" << row / A << ",a=" << row % A << ") is not stochastic";
      throw std::invalid_argument(os.str());
    }
  }
  if (rewards.minCoeff() < 0.0 || rewards.maxCoeff() > 1.0) {
    throw std::invalid_argument("tabular_embed: mean rewards must lie in [0,1]");
  }
  LinearMdp mdp;
  mdp.num_states = S;
  mdp.num_actions = A;
  mdp.horizon = horizon;
  mdp.features = Eigen::MatrixXd::Identity(S * A, S * A);
  mdp.measures = transitions.transpose();
  mdp.reward_param.resize(S * A);
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) mdp.reward_param(s * A + a) = rewards(s, a);
  }
  mdp.noise_sigma = noise_sigma;
  mdp.noise = noise;
  mdp.init_dist = init_dist;
  mdp.param_bound = std::max(mdp.reward_param.norm(), mdp.measures.colwise().sum().norm());
  return mdp;
}

PolicyTable::PolicyTable(int horizon, int num_states, int fill)
    : horizon_(horizon),
      num_states_(num_states),
      actions_(static_cast<std::size_t>(horizon) * static_cast<std::size_t>(num_states), fill) {}

void PolicyTable::check(const LinearMdp& mdp) const {
  if (horizon_ != mdp.horizon || num_states_ != mdp.num_states) {
    throw std::invalid_argument("PolicyTable: shape does not match the MDP");
  }
  for (int a : actions_) {
    if (a < 0 || a >= mdp.num_actions) throw std::invalid_argument("PolicyTable: action out of range");
  }
}

double bellman_backup(const LinearMdp& mdp, const Eigen::VectorXd& f, int s, int a) {
  const Eigen::VectorXd phi = mdp.phi(s, a).transpose();
  const Eigen::VectorXd next = mdp.measures * phi;
  return phi.dot(mdp.reward_param) + next.dot(f);
}

ValueTables exact_policy_values(const LinearMdp& mdp, const PolicyTable& policy) {
  check_shapes(mdp);
  policy.check(mdp);
  const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  const Eigen::MatrixXd P = transition_matrix(mdp);
  const Eigen::VectorXd r = mean_rewards(mdp);
  ValueTables out;
  out.v = Eigen::MatrixXd::Zero(H + 1, S);
  out.q.assign(static_cast<std::size_t>(H), Eigen::MatrixXd::Zero(S, A));
  for (int h = H - 1; h >= 0; --h) {
    const Eigen::VectorXd backup = r + P * out.v.row(h + 1).transpose();
    auto& q = out.q[static_cast<std::size_t>(h)];
    for (int s = 0; s < S; ++s) {
      for (int a = 0; a < A; ++a) q(s, a) = backup(mdp.pair_index(s, a));
      out.v(h, s) = q(s, policy(h, s));
    }
  }
  return out;
}

PolicyTable greedy_policy(const std::vector<Eigen::MatrixXd>& q) {
  const int H = static_cast<int>(q.size());
  const int S = H > 0 ? static_cast<int>(q.front().rows()) : 0;
  PolicyTable pi(H, S);
  for (int h = 0; h < H; ++h) {
    const auto& qh = q[static_cast<std::size_t>(h)];
    for (int s = 0; s < S; ++s) {
      int best = 0;
      for (int a = 1; a < qh.cols(); ++a) {
        if (qh(s, a) > qh(s, best)) best = a;
      }
      pi(h, s) = best;
    }
  }
  return pi;
}

OptimalSolution exact_optimal(const LinearMdp& mdp) {
  check_shapes(mdp);
  const int S = mdp.num_states, A = mdp.num_actions, H = mdp.horizon;
  const Eigen::MatrixXd P = transition_matrix(mdp);
  const Eigen::VectorXd r = mean_rewards(mdp);
  OptimalSolution out;
  out.values.v = Eigen::MatrixXd::Zero(H + 1, S);
  out.values.q.assign(static_cast<std::size_t>(H), Eigen::MatrixXd::Zero(S, A));
  out.policy = PolicyTable(H, S);
  for (int h = H - 1; h >= 0; --h) {
    const Eigen::VectorXd backup = r + P * out.values.v.row(h + 1).transpose();
    auto& q = out.values.q[static_cast<std::size_t>(h)];
    for (int s = 0; s < S; ++s) {
      int best = 0;
      for (int a = 0; a < A; ++a) {
        q(s, a) = backup(mdp.pair_index(s, a));
        if (q(s, a) > q(s, best)) best = a;
      }
      out.policy(h, s) = best;
      out.values.v(h, s) = q(s, best);
    }
  }
  return out;
}

double initial_value(const LinearMdp& mdp, const PolicyTable& policy) {
  const ValueTables vt = exact_policy_values(mdp, policy);
  return mdp.init_dist.dot(vt.v.row(0).transpose());
}

std::vector<Eigen::VectorXd> occupancy_by_step(const LinearMdp& mdp, const PolicyTable& policy) {
  check_shapes(mdp);
  policy.check(mdp);
  const int S = mdp.num_states, H = mdp.horizon;
  const Eigen::MatrixXd P = transition_matrix(mdp);
  std::vector<Eigen::VectorXd> out;
  out.reserve(static_cast<std::size_t>(H));
  Eigen::VectorXd state_dist = mdp.init_dist;
  for (int h = 0; h < H; ++h) {
    Eigen::VectorXd pairs = Eigen::VectorXd::Zero(mdp.num_pairs());
    for (int s = 0; s < S; ++s) pairs(mdp.pair_index(s, policy(h, s))) = state_dist(s);
    state_dist = P.transpose() * pairs;
    out.push_back(std::move(pairs));
  }
  return out;
}

Eigen::VectorXd occupancy(const LinearMdp& mdp, const PolicyTable& policy) {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(mdp.num_pairs());
  for (const auto& step : occupancy_by_step(mdp, policy)) d += step;
  return d / static_cast<double>(mdp.horizon);
}

double suboptimality(const LinearMdp& mdp, const PolicyTable& policy, const PolicyTable& comparator) {
  return initial_value(mdp, comparator) - initial_value(mdp, policy);
}

OfflineDistribution OfflineDistribution::uniform(int num_pairs) {
  return {Eigen::VectorXd::Constant(num_pairs, 1.0 / num_pairs)};
}

void OfflineDistribution::check() const {
  if (probs.size() == 0 || probs.minCoeff() < 0.0 || std::abs(probs.sum() - 1.0) > 1e-12) {
    throw std::invalid_argument("OfflineDistribution: not a probability vector");
  }
}

Eigen::MatrixXd covariance(const LinearMdp& mdp, const Eigen::VectorXd& weights) {
  if (weights.size() != mdp.num_pairs()) throw std::invalid_argument("covariance: weight length mismatch");
  const Eigen::MatrixXd cov = mdp.features.transpose() * weights.asDiagonal() * mdp.features;
  return 0.5 * (cov + cov.transpose());
}

double relative_condition_number(const Eigen::MatrixXd& comparator_cov, const Eigen::MatrixXd& data_cov) {
  const auto d = data_cov.rows();
  if (data_cov.cols() != d || comparator_cov.rows() != d || comparator_cov.cols() != d) {
    throw std::invalid_argument("relative_condition_number: matrices must be square and of equal size");
  }
  auto check_psd = [](const Eigen::MatrixXd& m, const char* what) {
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-9 * scale) {
      throw std::invalid_argument(std::string("relative_condition_number: ") + what + " is not symmetric");
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9 * scale) {
      throw std::invalid_argument(std::string("relative_condition_number: ") + what + " is indefinite");
    }
  };
  check_psd(comparator_cov, "comparator covariance");
  check_psd(data_cov, "data covariance");

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (data_cov + data_cov.transpose()));
  const Eigen::VectorXd& evals = es.eigenvalues();
  const Eigen::MatrixXd& evecs = es.eigenvectors();
  const double range_tol = 1e-9 * std::max(1.0, evals.maxCoeff());
  std::vector<Eigen::Index> range, null;
  for (Eigen::Index i = 0; i < d; ++i) (evals(i) > range_tol ? range : null).push_back(i);

  const Eigen::MatrixXd sym_cmp = 0.5 * (comparator_cov + comparator_cov.transpose());
  if (!null.empty()) {
    Eigen::MatrixXd null_basis(d, static_cast<Eigen::Index>(null.size()));
    for (std::size_t j = 0; j < null.size(); ++j) null_basis.col(static_cast<Eigen::Index>(j)) = evecs.col(null[j]);
    if ((sym_cmp * null_basis).norm() > 1e-9) return std::numeric_limits<double>::infinity();
  }
  if (range.empty()) return 0.0;

  const auto r = static_cast<Eigen::Index>(range.size());
  Eigen::MatrixXd whiten(d, r);
  for (Eigen::Index j = 0; j < r; ++j) {
    const auto i = range[static_cast<std::size_t>(j)];
    whiten.col(j) = evecs.col(i) / std::sqrt(evals(i));
  }
  const Eigen::MatrixXd reduced = whiten.transpose() * sym_cmp * whiten;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> rs(0.5 * (reduced + reduced.transpose()), Eigen::EigenvaluesOnly);
  return std::max(0.0, rs.eigenvalues().maxCoeff());
}

double sample_reward(const LinearMdp& mdp, double mean_reward, Rng& rng) {
  switch (mdp.noise) {
    case RewardNoise::gaussian: return mean_reward + mdp.noise_sigma * rng.normal();
    case RewardNoise::uniform: return mean_reward + mdp.noise_sigma * std::sqrt(3.0) * (2.0 * rng.uniform() - 1.0);
    case RewardNoise::bernoulli: return rng.bernoulli(mean_reward) ? 1.0 : 0.0;
  }
  return mean_reward;
}

Dataset collect_clean(const LinearMdp& mdp, const OfflineDistribution& nu, std::size_t n, std::uint64_t seed) {
  check_shapes(mdp);
  nu.check();
  if (nu.probs.size() != mdp.num_pairs()) throw std::invalid_argument("collect_clean: nu has the wrong length");
  if (n == 0) throw std::invalid_argument("collect_clean: N must be at least 1");

  const Eigen::MatrixXd P = transition_matrix(mdp).cwiseMax(0.0);
  const Eigen::VectorXd r = mean_rewards(mdp);
  const CategoricalSampler pair_sampler(std::span<const double>(nu.probs.data(), static_cast<std::size_t>(nu.probs.size())));
  std::vector<CategoricalSampler> next_samplers;
  next_samplers.reserve(static_cast<std::size_t>(mdp.num_pairs()));
  for (int row = 0; row < mdp.num_pairs(); ++row) {
    const Eigen::VectorXd p = P.row(row).transpose();
    next_samplers.emplace_back(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())));
  }

  Rng rng(seed);
  std::vector<Transition> tuples;
  tuples.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = static_cast<int>(pair_sampler.sample(rng));
    Transition t;
    t.state = row / mdp.num_actions;
    t.action = row % mdp.num_actions;
    t.reward = sample_reward(mdp, r(row), rng);
    t.next_state = static_cast<int>(next_samplers[static_cast<std::size_t>(row)].sample(rng));
    tuples.push_back(t);
  }
  return Dataset(std::move(tuples));
}

}  // namespace corrl
