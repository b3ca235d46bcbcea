// Objective values, gradients of the smooth parts and proximal operators of
// the nonsmooth parts, for both portfolio criteria.
//
// Markowitz:  f(w) = w'(Sigma + lambda I)w - gamma mu'w
// CVaR:       f_beta(w) = min_alpha alpha + 1/(N(1-beta)) sum_j [-w'r_j - alpha]_+
//
// The relaxed CVaR objective splits the hinge through an auxiliary u ~ -Rw-alpha
// with quadratic coupling weight rho, then eliminates alpha in closed form:
//
//   g(w,u,v) = alpha*(u,w) + 1/(N(1-beta)) sum_j [u_j]_+ + nu/2 ||w-v||^2
//              + rho/2 || (I - 11'/N)(Rw+u) - 1/(rho N) 1 ||^2
//
// The centering matrix is never materialized; Mx = x - mean(x) 1 keeps all
// products O(N). Gradient formulas below are locked in by finite-difference
// tests rather than trusted from hand algebra.

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "cardport/returns.hpp"

namespace cardport {

struct MarkowitzParams {
  double gamma_return = 0.0;  // weight on expected return
  double lambda_ridge = 0.0;  // ridge added to the covariance
};

struct CvarParams {
  double beta = 0.9;       // quantile level in (0,1)
  double rho_relax = 20.0; // coupling weight tying u to -Rw-alpha

  void validate() const {
    if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("cvar params: beta must be in (0,1)");
    if (!(rho_relax > 0.0)) throw std::invalid_argument("cvar params: rho_relax must be positive");
  }
};

/// Coupled iterate of the relaxed problems. u and alpha are only populated by
/// the CVaR solvers.
struct PortfolioState {
  Eigen::VectorXd w;
  Eigen::VectorXd v;
  Eigen::VectorXd u;  // empty when unused
  std::optional<double> alpha;
};

/// Mx = x - mean(x).
inline Eigen::VectorXd centered(const Eigen::Ref<const Eigen::VectorXd>& x) {
  return (x.array() - x.mean()).matrix();
}

inline double markowitz_value(const Eigen::Ref<const Eigen::VectorXd>& w, const Moments& m,
                              const MarkowitzParams& p) {
  const double quad = w.dot(m.sigma * w) + p.lambda_ridge * w.squaredNorm();
  return quad - p.gamma_return * m.mu.dot(w);
}

/// Gradient in w of the relaxed Markowitz objective
/// w'(Sigma+lambda I)w - gamma mu'w + nu/2 ||w-v||^2.
inline Eigen::VectorXd markowitz_grad(const Eigen::Ref<const Eigen::VectorXd>& w,
                                      const Eigen::Ref<const Eigen::VectorXd>& v, const Moments& m,
                                      const MarkowitzParams& p, double nu) {
  return 2.0 * (m.sigma * w) + 2.0 * p.lambda_ridge * w - p.gamma_return * m.mu + nu * (w - v);
}

struct CvarValue {
  double phi;    // beta-CVaR (superquantile)
  double alpha;  // a minimizing alpha (beta-VaR)
};

/// Exact empirical superquantile: the objective is convex piecewise linear in
/// alpha with breakpoints at the sample losses, so the minimum is found by
/// sorting losses and scanning breakpoints with suffix sums.
inline CvarValue cvar_exact(const Eigen::Ref<const Eigen::VectorXd>& w, const Eigen::MatrixXd& returns,
                            double beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw std::invalid_argument("cvar_exact: beta must be in (0,1)");
  const Eigen::Index n_samples = returns.rows();
  if (n_samples < 1) throw std::invalid_argument("cvar_exact: need at least one sample");
  std::vector<double> losses(static_cast<std::size_t>(n_samples));
  Eigen::Map<Eigen::VectorXd>(losses.data(), n_samples) = -(returns * w);
  std::sort(losses.begin(), losses.end());

  const double scale = 1.0 / (static_cast<double>(n_samples) * (1.0 - beta));
  // suffix[i] = sum of losses[i..N-1]
  double suffix = 0.0;
  std::vector<double> suffix_sums(losses.size() + 1, 0.0);
  for (std::size_t i = losses.size(); i-- > 0;) {
    suffix += losses[i];
    suffix_sums[i] = suffix;
  }
  double best_phi = std::numeric_limits<double>::infinity();
  double best_alpha = losses.front();
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const double alpha = losses[i];
    const double tail = suffix_sums[i + 1] - static_cast<double>(losses.size() - i - 1) * alpha;
    const double phi = alpha + scale * std::max(tail, 0.0);
    if (phi < best_phi) {
      best_phi = phi;
      best_alpha = alpha;
    }
  }
  return {best_phi, best_alpha};
}

/// Closed-form partial minimizer of the pre-elimination objective in alpha:
/// alpha*(u,w) = -(1 + rho 1'(Rw+u)) / (rho N).
inline double alpha_star(const Eigen::Ref<const Eigen::VectorXd>& w, const Eigen::Ref<const Eigen::VectorXd>& u,
                         const Eigen::MatrixXd& returns, double rho) {
  const double n = static_cast<double>(returns.rows());
  const double s = (returns * w + u).sum();
  return -(1.0 + rho * s) / (rho * n);
}

/// Smooth part of the relaxed CVaR objective (everything except the hinge sum
/// and the simplex indicator).
inline double cvar_smooth_value(const Eigen::Ref<const Eigen::VectorXd>& w,
                                const Eigen::Ref<const Eigen::VectorXd>& u,
                                const Eigen::Ref<const Eigen::VectorXd>& v, const Eigen::MatrixXd& returns,
                                const CvarParams& p, double nu) {
  const double n = static_cast<double>(returns.rows());
  const Eigen::VectorXd a = returns * w + u;
  const Eigen::VectorXd m = (centered(a).array() - 1.0 / (p.rho_relax * n)).matrix();
  return alpha_star(w, u, returns, p.rho_relax) + 0.5 * nu * (w - v).squaredNorm() +
         0.5 * p.rho_relax * m.squaredNorm();
}

inline double hinge_sum(const Eigen::Ref<const Eigen::VectorXd>& u) { return u.array().max(0.0).sum(); }

/// Relaxed CVaR objective g(w,u,v) at penalty weight nu.
inline double cvar_relaxed_value(const Eigen::Ref<const Eigen::VectorXd>& w,
                                 const Eigen::Ref<const Eigen::VectorXd>& u,
                                 const Eigen::Ref<const Eigen::VectorXd>& v, const Eigen::MatrixXd& returns,
                                 const CvarParams& p, double nu) {
  const double n = static_cast<double>(returns.rows());
  return cvar_smooth_value(w, u, v, returns, p, nu) + hinge_sum(u) / (n * (1.0 - p.beta));
}

/// Gradient of the smooth part in w:
///   -R'1/N + nu (w-v) + rho R' M (Rw+u).
inline Eigen::VectorXd cvar_grad_w(const Eigen::Ref<const Eigen::VectorXd>& w,
                                   const Eigen::Ref<const Eigen::VectorXd>& u,
                                   const Eigen::Ref<const Eigen::VectorXd>& v, const Eigen::MatrixXd& returns,
                                   const CvarParams& p, double nu) {
  const double n = static_cast<double>(returns.rows());
  const Eigen::VectorXd coeff =
      (p.rho_relax * centered(returns * w + u).array() - 1.0 / n).matrix();
  return returns.transpose() * coeff + nu * (w - v);
}

/// Gradient of the smooth part in u: -1/N + rho M (Rw+u), componentwise.
inline Eigen::VectorXd cvar_grad_u(const Eigen::Ref<const Eigen::VectorXd>& w,
                                   const Eigen::Ref<const Eigen::VectorXd>& u, const Eigen::MatrixXd& returns,
                                   const CvarParams& p) {
  const double n = static_cast<double>(returns.rows());
  return (p.rho_relax * centered(returns * w + u).array() - 1.0 / n).matrix();
}

/// Componentwise prox of t * (1/(N(1-beta))) [x]_+ : soft shift of the
/// positive side by tau = t/(N(1-beta)), identity on the negative side.
inline Eigen::VectorXd hinge_prox(const Eigen::Ref<const Eigen::VectorXd>& x, double t, double beta,
                                  int n_samples) {
  if (!(t > 0.0)) throw std::invalid_argument("hinge_prox: scale must be positive");
  const double tau = t / (static_cast<double>(n_samples) * (1.0 - beta));
  Eigen::VectorXd z(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > tau)
      z[i] = x[i] - tau;
    else if (x[i] >= 0.0)
      z[i] = 0.0;
    else
      z[i] = x[i];
  }
  return z;
}

}  // namespace cardport
