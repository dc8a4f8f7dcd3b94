#pragma once

// Reference computations used by the tests. They share no code with the
// library beyond the data types: sampling uses <random>, values use forward
// propagation instead of backward induction, and maximizations are brute force.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <vector>

#include "corrl/mdp.hpp"

namespace oracle {

/// P(s'|s,a) computed directly as phi . mu.
inline double prob(const corrl::LinearMdp& m, int s, int a, int sn) {
  return m.features.row(s * m.num_actions + a).dot(m.measures.row(sn));
}

inline double mean_reward(const corrl::LinearMdp& m, int s, int a) {
  return m.features.row(s * m.num_actions + a).dot(m.reward_param);
}

/// Expected return by propagating the state distribution forward.
inline double forward_value(const corrl::LinearMdp& m, const std::function<int(int, int)>& act) {
  const int S = m.num_states;
  std::vector<double> dist(m.init_dist.data(), m.init_dist.data() + S);
  double total = 0.0;
  for (int h = 0; h < m.horizon; ++h) {
    std::vector<double> next(static_cast<std::size_t>(S), 0.0);
    for (int s = 0; s < S; ++s) {
      if (dist[s] == 0.0) continue;
      const int a = act(h, s);
      total += dist[s] * mean_reward(m, s, a);
      for (int sn = 0; sn < S; ++sn) next[sn] += dist[s] * prob(m, s, a, sn);
    }
    dist = std::move(next);
  }
  return total;
}

inline double forward_value(const corrl::LinearMdp& m, const corrl::PolicyTable& pi) {
  return forward_value(m, [&](int h, int s) { return pi(h, s); });
}

/// Calls f on every deterministic nonstationary policy (A^(S H) of them).
inline void for_each_policy(int S, int A, int H, const std::function<void(const corrl::PolicyTable&)>& f) {
  corrl::PolicyTable pi(H, S, 0);
  const int cells = S * H;
  while (true) {
    f(pi);
    int c = 0;
    for (; c < cells; ++c) {
      int& slot = pi(c / S, c % S);
      if (++slot < A) break;
      slot = 0;
    }
    if (c == cells) return;
  }
}

struct RolloutStats {
  double mean_return = 0.0;
  double se_return = 0.0;
  Eigen::VectorXd visit_freq;  // h-averaged visit frequency per pair
  std::size_t episodes = 0;
};

/// Monte-Carlo rollouts with Gaussian reward noise.
inline RolloutStats rollouts(const corrl::LinearMdp& m, const corrl::PolicyTable& pi, std::size_t episodes,
                             std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  const int S = m.num_states, A = m.num_actions, H = m.horizon;
  std::discrete_distribution<int> init(m.init_dist.data(), m.init_dist.data() + S);
  std::vector<std::discrete_distribution<int>> trans;
  for (int s = 0; s < S; ++s) {
    for (int a = 0; a < A; ++a) {
      std::vector<double> p(static_cast<std::size_t>(S));
      for (int sn = 0; sn < S; ++sn) p[sn] = std::max(0.0, prob(m, s, a, sn));
      trans.emplace_back(p.begin(), p.end());
    }
  }
  std::normal_distribution<double> noise(0.0, m.noise_sigma);
  RolloutStats out;
  out.visit_freq = Eigen::VectorXd::Zero(S * A);
  out.episodes = episodes;
  double sum = 0.0, sumsq = 0.0;
  for (std::size_t e = 0; e < episodes; ++e) {
    int s = init(gen);
    double ret = 0.0;
    for (int h = 0; h < H; ++h) {
      const int a = pi(h, s);
      out.visit_freq(s * A + a) += 1.0;
      ret += mean_reward(m, s, a) + (m.noise_sigma > 0 ? noise(gen) : 0.0);
      s = trans[static_cast<std::size_t>(s * A + a)](gen);
    }
    sum += ret;
    sumsq += ret * ret;
  }
  const double n = static_cast<double>(episodes);
  out.mean_return = sum / n;
  out.se_return = std::sqrt(std::max(0.0, sumsq / n - out.mean_return * out.mean_return) / n);
  out.visit_freq /= n * H;
  return out;
}

/// sup (w'Aw)/(w'Bw) by random unit vectors followed by coordinate refinement.
inline double rayleigh_max(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B, std::size_t samples,
                           std::uint64_t seed) {
  const int d = static_cast<int>(A.rows());
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> g;
  auto q = [&](const Eigen::VectorXd& w) { return w.dot(A * w) / w.dot(B * w); };
  Eigen::VectorXd best = Eigen::VectorXd::Unit(d, 0);
  double best_q = q(best);
  for (std::size_t i = 0; i < samples; ++i) {
    Eigen::VectorXd w(d);
    for (int j = 0; j < d; ++j) w(j) = g(gen);
    const double v = q(w);
    if (v > best_q) {
      best_q = v;
      best = w;
    }
  }
  for (double step = 0.1; step > 1e-12; step *= 0.5) {
    bool improved = true;
    while (improved) {
      improved = false;
      for (int j = 0; j < d; ++j) {
        for (double sgn : {-1.0, 1.0}) {
          Eigen::VectorXd w = best;
          w(j) += sgn * step * best.norm();
          const double v = q(w);
          if (v > best_q) {
            best_q = v;
            best = w;
            improved = true;
          }
        }
      }
    }
  }
  return best_q;
}

/// max over y in {-2H, 0, 2H}^N with at most k nonzeros of
/// phi' Lambda^{-1} (1/N) sum_i phi_i y_i, by enumeration.
inline double brute_force_gap(const Eigen::VectorXd& phi, const Eigen::MatrixXd& train, const Eigen::MatrixXd& Lambda,
                              std::size_t k, int H) {
  const int n = static_cast<int>(train.rows());
  const Eigen::VectorXd dir = Lambda.fullPivLu().solve(phi);
  std::vector<double> c(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) c[i] = dir.dot(train.row(i).transpose()) / n;
  std::size_t total = 1;
  for (int i = 0; i < n; ++i) total *= 3;
  double best = 0.0;
  for (std::size_t code = 0; code < total; ++code) {
    std::size_t x = code, nonzero = 0;
    double val = 0.0;
    for (int i = 0; i < n; ++i, x /= 3) {
      const int digit = static_cast<int>(x % 3);
      if (digit == 0) continue;
      ++nonzero;
      val += c[i] * (digit == 1 ? 2.0 * H : -2.0 * H);
    }
    if (nonzero <= k) best = std::max(best, val);
  }
  return best;
}

/// Mean after dropping the k largest |x - median| values (1-d trimmed mean).
inline double trimmed_mean(std::vector<double> x, std::size_t k) {
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double med = sorted[sorted.size() / 2];
  std::sort(x.begin(), x.end(), [&](double a, double b) { return std::abs(a - med) < std::abs(b - med); });
  x.resize(x.size() - k);
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// (X'X + ridge I)^{-1} X'y by a dense LU solve.
inline Eigen::VectorXd dense_ols(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double ridge) {
  Eigen::MatrixXd G = X.transpose() * X;
  G.diagonal().array() += ridge;
  return G.fullPivLu().solve(X.transpose() * y);
}

/// Golden-section minimizer of a unimodal f on [lo, hi].
inline double golden_section(const std::function<double(double)>& f, double lo, double hi, double tol = 1e-12) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  while (b - a > tol) {
    if (f(c) < f(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - r * (b - a);
    d = a + r * (b - a);
  }
  return 0.5 * (a + b);
}

inline double huber_loss(double r, double delta) {
  const double a = std::abs(r);
  return a <= delta ? 0.5 * r * r : delta * (a - 0.5 * delta);
}

/// Binomial standard error for a success frequency.
inline double binomial_sigma(double p, std::size_t n) { return std::sqrt(p * (1.0 - p) / static_cast<double>(n)); }

}  // namespace oracle
