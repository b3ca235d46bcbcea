// Independent reference implementations used to compute expected values.
// Everything here is deliberately written with different algorithms than the
// library (active-set QP instead of sort-and-threshold, exhaustive support
// enumeration instead of top-k selection, grids instead of closed forms) so
// agreement is meaningful.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace testsupport {

/// Primal active-set method for  min 1/2 z'Hz + f'z  s.t. 1'z = c, z >= 0
/// with H symmetric positive definite.
inline Eigen::VectorXd qp_simplex_eq(const Eigen::MatrixXd& h, const Eigen::VectorXd& f, double c) {
  const int n = static_cast<int>(h.rows());
  if (c == 0.0) return Eigen::VectorXd::Zero(n);
  Eigen::VectorXd z = Eigen::VectorXd::Constant(n, c / n);
  std::vector<bool> fixed(static_cast<std::size_t>(n), false);

  for (int outer = 0; outer < 30 * n + 100; ++outer) {
    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i)
      if (!fixed[static_cast<std::size_t>(i)]) free_idx.push_back(i);
    const int m = static_cast<int>(free_idx.size());
    // KKT system on the free block: [H_FF 1; 1' 0] [z_F; lambda] = [-f_F; c]
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + 1, m + 1);
    Eigen::VectorXd rhs(m + 1);
    for (int a = 0; a < m; ++a) {
      rhs[a] = -f[free_idx[static_cast<std::size_t>(a)]];
      kkt(a, m) = 1.0;
      kkt(m, a) = 1.0;
      for (int b = 0; b < m; ++b)
        kkt(a, b) = h(free_idx[static_cast<std::size_t>(a)], free_idx[static_cast<std::size_t>(b)]);
    }
    rhs[m] = c;
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    const double lambda = sol[m];

    Eigen::VectorXd direction = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < m; ++a)
      direction[free_idx[static_cast<std::size_t>(a)]] = sol[a] - z[free_idx[static_cast<std::size_t>(a)]];

    if (direction.lpNorm<Eigen::Infinity>() <= 1e-12) {
      // check multipliers of the active bounds
      const Eigen::VectorXd grad = h * z + f;
      int release = -1;
      double most_negative = -1e-10;
      for (int i = 0; i < n; ++i) {
        if (!fixed[static_cast<std::size_t>(i)]) continue;
        const double mult = grad[i] + lambda;
        if (mult < most_negative) {
          most_negative = mult;
          release = i;
        }
      }
      if (release < 0) return z;
      fixed[static_cast<std::size_t>(release)] = false;
      continue;
    }

    double step = 1.0;
    int blocking = -1;
    for (const int i : free_idx) {
      if (direction[i] < -1e-15) {
        const double limit = -z[i] / direction[i];
        if (limit < step) {
          step = limit;
          blocking = i;
        }
      }
    }
    z += step * direction;
    if (blocking >= 0) {
      z[blocking] = 0.0;
      fixed[static_cast<std::size_t>(blocking)] = true;
    }
  }
  throw std::runtime_error("qp_simplex_eq: active-set iteration cap reached");
}

/// Least-distance projection onto {z >= 0, 1'z = c} via the QP above.
inline Eigen::VectorXd qp_project_simplex(const Eigen::VectorXd& u, double c) {
  const int n = static_cast<int>(u.size());
  return qp_simplex_eq(Eigen::MatrixXd::Identity(n, n), -u, c);
}

/// Least-distance projection onto {z >= 0, p <= 1'z <= q} by KKT case
/// enumeration: the sum constraint is inactive, at p, or at q.
inline Eigen::VectorXd qp_project_box_sum(const Eigen::VectorXd& u, double p, double q) {
  std::vector<Eigen::VectorXd> candidates;
  const Eigen::VectorXd positive = u.cwiseMax(0.0);
  const double s = positive.sum();
  if (s >= p - 1e-13 && s <= q + 1e-13) candidates.push_back(positive);
  candidates.push_back(qp_project_simplex(u, p));
  candidates.push_back(qp_project_simplex(u, q));
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_z;
  for (const auto& z : candidates) {
    const double d = (z - u).squaredNorm();
    if (d < best) {
      best = d;
      best_z = z;
    }
  }
  return best_z;
}

inline void enumerate_supports(int n, int k, std::vector<std::vector<int>>& out) {
  std::vector<int> current;
  const std::function<void(int)> recurse = [&](int next) {
    if (static_cast<int>(current.size()) == k) {
      out.push_back(current);
      return;
    }
    for (int i = next; i < n; ++i) {
      current.push_back(i);
      recurse(i + 1);
      current.pop_back();
    }
  };
  recurse(0);
}

/// Exact projection onto {z >= 0, p <= 1'z <= q, ||z||_0 <= k}: every support
/// is tried and solved by the convex QP.
inline Eigen::VectorXd qp_project_group_bruteforce(const Eigen::VectorXd& y, int k, double p, double q,
                                                   double* best_dist = nullptr) {
  const int n = static_cast<int>(y.size());
  std::vector<std::vector<int>> supports;
  enumerate_supports(n, k, supports);
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd best_z;
  for (const auto& support : supports) {
    Eigen::VectorXd sub(static_cast<Eigen::Index>(support.size()));
    for (std::size_t i = 0; i < support.size(); ++i) sub[static_cast<Eigen::Index>(i)] = y[support[i]];
    const Eigen::VectorXd proj = qp_project_box_sum(sub, p, q);
    Eigen::VectorXd z = Eigen::VectorXd::Zero(n);
    for (std::size_t i = 0; i < support.size(); ++i) z[support[i]] = proj[static_cast<Eigen::Index>(i)];
    const double d = (z - y).squaredNorm();
    if (d < best) {
      best = d;
      best_z = z;
    }
  }
  if (best_dist != nullptr) *best_dist = best;
  return best_z;
}

/// Two-pass mean / population covariance, plain loops.
inline void two_pass_moments(const Eigen::MatrixXd& returns, Eigen::VectorXd& mu, Eigen::MatrixXd& sigma) {
  const Eigen::Index n_samples = returns.rows();
  const Eigen::Index n = returns.cols();
  mu = Eigen::VectorXd::Zero(n);
  for (Eigen::Index j = 0; j < n_samples; ++j)
    for (Eigen::Index i = 0; i < n; ++i) mu[i] += returns(j, i);
  mu /= static_cast<double>(n_samples);
  sigma = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n_samples; ++j)
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b) sigma(a, b) += (returns(j, a) - mu[a]) * (returns(j, b) - mu[b]);
  sigma /= static_cast<double>(n_samples);
}

/// Central finite differences.
template <class F>
inline Eigen::VectorXd finite_diff(F&& f, const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Eigen::VectorXd hi = x, lo = x;
    hi[i] += h;
    lo[i] -= h;
    g[i] = (f(hi) - f(lo)) / (2.0 * h);
  }
  return g;
}

/// Dense scan of F_beta(w, alpha) over an alpha grid spanning the losses.
inline double cvar_grid_min(const Eigen::VectorXd& losses, double beta, int grid_points = 200001) {
  const double lo = losses.minCoeff();
  const double hi = losses.maxCoeff();
  const double pad = 0.1 * (hi - lo) + 1e-3;
  const double n = static_cast<double>(losses.size());
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < grid_points; ++i) {
    const double alpha = lo - pad + (hi - lo + 2 * pad) * static_cast<double>(i) / (grid_points - 1);
    const double value = alpha + (losses.array() - alpha).max(0.0).sum() / (n * (1.0 - beta));
    best = std::min(best, value);
  }
  return best;
}

/// Brute-force scalar prox of tau * [z]_+ at x over a fine grid.
inline double prox_grid_scalar(double x, double tau, double step = 1e-4) {
  const double lo = x - 2.0 * tau - 1.0;
  const double hi = x + 1.0;
  double best_z = lo, best = std::numeric_limits<double>::infinity();
  for (double z = lo; z <= hi; z += step) {
    const double value = 0.5 * (z - x) * (z - x) + tau * std::max(z, 0.0);
    if (value < best) {
      best = value;
      best_z = z;
    }
  }
  return best_z;
}

inline double dense_lambda_max(const Eigen::MatrixXd& a) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(a).eigenvalues().maxCoeff();
}

inline Eigen::MatrixXd random_psd(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXd g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = gauss(rng);
  return scale * (g.transpose() * g) / static_cast<double>(n);
}

inline Eigen::VectorXd random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = gauss(rng);
  return v;
}

}  // namespace testsupport
