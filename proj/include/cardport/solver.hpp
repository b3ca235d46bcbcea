// PALM and FISTA-accelerated PALM for the relaxed cardinality-constrained
// problems, the no-grouping proximal-gradient fast path, support-restricted
// solves, step-size estimation and stationarity diagnostics.
//
// Iteration layout (one stage of the continuation over nu):
//   w <- Proj_simplex( w - delta_w * (grad f(w) + nu (w - v)) )
//   u <- hinge-prox  ( u - delta_u * grad_u )          (CVaR only)
//   v_i <- Proj_{V_i}(w_i)                             (per group)
// Step sizes are inverse Lipschitz constants of the smooth parts; the
// unaccelerated trace is monotone and a violation beyond 1e-10 aborts the
// run, which in practice catches bad step configuration immediately.

#pragma once

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "cardport/linprog.hpp"
#include "cardport/objectives.hpp"
#include "cardport/projections.hpp"
#include "cardport/returns.hpp"

namespace cardport {

enum class Model { kMarkowitz, kCvar };

inline const char* model_name(Model m) { return m == Model::kMarkowitz ? "markowitz" : "cvar"; }

struct ProblemSpec {
  ReturnsPanel panel;
  Moments moments;
  GroupPartition partition;
  Model model = Model::kMarkowitz;
  MarkowitzParams markowitz;
  CvarParams cvar;

  int n_assets() const { return panel.n_assets(); }

  void validate() const {
    panel.validate();
    partition.validate();
    if (partition.n_assets != panel.n_assets())
      throw std::invalid_argument("problem: partition covers " + std::to_string(partition.n_assets) +
                                  " assets but the panel has " + std::to_string(panel.n_assets()));
    if (model == Model::kCvar) cvar.validate();
    if (markowitz.gamma_return < 0.0 || markowitz.lambda_ridge < 0.0)
      throw std::invalid_argument("problem: markowitz parameters must be nonnegative");
  }
};

inline ProblemSpec make_problem(ReturnsPanel panel, GroupPartition partition, Model model,
                                MarkowitzParams mk = {}, CvarParams cv = {}) {
  ProblemSpec prob;
  prob.moments = estimate_moments(panel);
  prob.panel = std::move(panel);
  prob.partition = std::move(partition);
  prob.model = model;
  prob.markowitz = mk;
  prob.cvar = cv;
  prob.validate();
  return prob;
}

enum class StepMode { kInverseLipschitz, kFixed };
enum class FistaForm { kStandard, kReflected };

struct SolverConfig {
  /// Continuation weights, strictly positive and nondecreasing. Empty means
  /// automatic: {1,10,...,1e6} scaled by the smooth part's Lipschitz constant.
  std::vector<double> nu_schedule;
  int max_iters = 5000;  // per continuation stage
  double tol = 1e-8;     // infinity-norm iterate change
  StepMode step_mode = StepMode::kInverseLipschitz;
  double fixed_step = 0.0;  // used when step_mode == kFixed
  bool accelerate = true;
  FistaForm fista_form = FistaForm::kStandard;
  std::uint64_t seed = 0;
  double relax_gap_tol = 1e-6;
  /// Extra seeded random-simplex starts for the relaxed solvers; the run with
  /// the best feasible readout wins. Ignored when a start point is supplied.
  int restarts = 2;
  /// Optional per-iteration observer (tests use it to audit feasibility).
  std::function<void(int, const PortfolioState&)> on_iterate;

  void validate() const {
    if (max_iters < 1) throw std::invalid_argument("solver config: max_iters must be positive");
    if (restarts < 0) throw std::invalid_argument("solver config: restarts must be nonnegative");
    if (!(tol > 0.0)) throw std::invalid_argument("solver config: tol must be positive");
    if (step_mode == StepMode::kFixed && !(fixed_step > 0.0))
      throw std::invalid_argument("solver config: fixed step must be positive");
    for (std::size_t i = 0; i < nu_schedule.size(); ++i) {
      if (!(nu_schedule[i] > 0.0)) throw std::invalid_argument("solver config: nu weights must be positive");
      if (i > 0 && nu_schedule[i] < nu_schedule[i - 1])
        throw std::invalid_argument("solver config: nu schedule must be nondecreasing");
    }
  }
};

struct SolveReport {
  PortfolioState state;
  Eigen::VectorXd portfolio;          // feasible reported weights (support re-solved)
  double portfolio_value = 0.0;       // true objective at `portfolio`
  std::optional<double> portfolio_alpha;  // beta-VaR at `portfolio` (CVaR runs)
  std::vector<double> objective_trace;
  std::vector<double> stage_gaps;     // final ||w-v|| per continuation stage
  double relax_gap = 0.0;
  int iterations = 0;
  bool converged = false;
  double stationarity_residual = 0.0;
  double wall_time = 0.0;
  bool lipschitz_converged = true;    // power-iteration fallback flag
};

struct LipschitzEstimate {
  double value = 0.0;
  bool converged = false;
  int iterations = 0;
};

/// Largest eigenvalue of a symmetric PSD operator by seeded power iteration.
/// Falls back to a Frobenius-norm bound (probing unit vectors) when the
/// Rayleigh quotient has not settled, flagged via `converged = false`.
inline LipschitzEstimate estimate_lipschitz(const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& op,
                                            int dim, std::uint64_t seed, double rel_tol = 1e-9,
                                            int max_iters = 2000) {
  if (dim < 1) throw std::invalid_argument("estimate_lipschitz: dimension must be positive");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x[i] = gauss(rng);
  x.normalize();

  LipschitzEstimate est;
  double lambda = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    const Eigen::VectorXd y = op(x);
    const double lambda_new = x.dot(y);
    const double norm = y.norm();
    est.iterations = it + 1;
    if (norm <= 1e-300) {  // operator is (numerically) zero
      est.value = 0.0;
      est.converged = true;
      return est;
    }
    if (it > 0 && std::abs(lambda_new - lambda) <= rel_tol * std::max(std::abs(lambda_new), 1e-300)) {
      est.value = lambda_new;
      est.converged = true;
      return est;
    }
    lambda = lambda_new;
    x = y / norm;
  }
  // conservative upper bound: ||A||_F >= lambda_max for symmetric A
  double frob2 = 0.0;
  Eigen::VectorXd e = Eigen::VectorXd::Zero(dim);
  for (int i = 0; i < dim; ++i) {
    e[i] = 1.0;
    frob2 += op(e).squaredNorm();
    e[i] = 0.0;
  }
  est.value = std::sqrt(frob2);
  est.converged = false;
  return est;
}

struct FistaState {
  double t = 1.0;
  Eigen::VectorXd x;  // current point
  Eigen::VectorXd y;  // extrapolated point fed to the prox-gradient step
};

/// One FISTA round: x+ = step(y), momentum recursion, extrapolation.
/// kStandard extrapolates ahead of the new point; kReflected anchors at the
/// previous point with the difference reversed (y+ = x + c (x - x+)).
template <class StepFn>
inline FistaState fista_update(const FistaState& s, StepFn&& prox_grad_step,
                               FistaForm form = FistaForm::kStandard) {
  FistaState next;
  next.x = prox_grad_step(s.y);
  next.t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * s.t * s.t));
  const double coeff = (s.t - 1.0) / next.t;
  if (form == FistaForm::kStandard)
    next.y = next.x + coeff * (next.x - s.x);
  else
    next.y = s.x + coeff * (s.x - next.x);
  return next;
}

inline Eigen::VectorXd uniform_weights(int n) { return Eigen::VectorXd::Constant(n, 1.0 / n); }

/// Seeded uniform draw from the simplex (exponential spacings).
inline Eigen::VectorXd random_simplex_point(int n, std::mt19937_64& rng) {
  std::exponential_distribution<double> exp1(1.0);
  Eigen::VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = exp1(rng);
  return x / x.sum();
}

namespace detail {

inline bool trivial_budget(const GroupSpec& g) { return g.budget_min <= 0.0 && g.budget_max >= 1.0; }

/// Partition restricted to a support set, reindexed to 0..|K|-1. Groups with
/// an empty intersection are dropped (an error if they carry a positive lower
/// budget, since the support then cannot be completed to a feasible point).
inline GroupPartition restrict_partition(const GroupPartition& part, const std::vector<int>& support) {
  std::vector<int> position(static_cast<std::size_t>(part.n_assets), -1);
  for (std::size_t i = 0; i < support.size(); ++i) position[static_cast<std::size_t>(support[i])] = static_cast<int>(i);
  GroupPartition out;
  out.n_assets = static_cast<int>(support.size());
  for (const auto& g : part.groups) {
    GroupSpec r;
    r.name = g.name;
    r.budget_min = g.budget_min;
    r.budget_max = g.budget_max;
    for (const int i : g.indices)
      if (position[static_cast<std::size_t>(i)] >= 0) r.indices.push_back(position[static_cast<std::size_t>(i)]);
    if (r.indices.empty()) {
      if (g.budget_min > 0.0)
        throw std::runtime_error("restricted solve: support misses group '" + g.name +
                                 "' which has a positive lower budget");
      continue;
    }
    r.max_assets = static_cast<int>(r.indices.size());
    out.groups.push_back(std::move(r));
  }
  return out;
}

inline bool any_nontrivial_budget(const GroupPartition& part) {
  for (const auto& g : part.groups)
    if (!trivial_budget(g)) return true;
  return false;
}

}  // namespace detail

struct RestrictedSolution {
  Eigen::VectorXd w;   // full length, zero off the support
  double value = 0.0;  // true objective at w
  std::optional<double> alpha;
};

/// Convex solve with the support fixed: min f(w), supp(w) in K, w on the
/// simplex restricted to K (plus the partition's budget bounds when
/// `budgets` is given). Markowitz runs projected FISTA on the reduced
/// quadratic; CVaR is solved exactly as the epigraph linear program.
inline RestrictedSolution restricted_solve(const ProblemSpec& prob, const std::vector<int>& support,
                                           const GroupPartition* budgets = nullptr) {
  if (support.empty()) throw std::invalid_argument("restricted_solve: empty support");
  const int n = prob.n_assets();
  const int k = static_cast<int>(support.size());
  for (const int i : support)
    if (i < 0 || i >= n) throw std::invalid_argument("restricted_solve: support index out of range");

  GroupPartition reduced;
  bool use_budgets = false;
  if (budgets != nullptr) {
    reduced = detail::restrict_partition(*budgets, support);
    use_budgets = detail::any_nontrivial_budget(reduced);
    if (use_budgets) {
      double q_sum = 0.0;
      for (const auto& g : reduced.groups) q_sum += g.budget_max;
      if (q_sum < 1.0 - 1e-12)
        throw std::runtime_error("restricted solve: support cannot reach total weight 1 under the budgets");
    }
  }

  RestrictedSolution sol;
  sol.w = Eigen::VectorXd::Zero(n);

  if (prob.model == Model::kMarkowitz) {
    Eigen::MatrixXd h(k, k);
    Eigen::VectorXd mu_k(k);
    for (int a = 0; a < k; ++a) {
      mu_k[a] = prob.moments.mu[support[static_cast<std::size_t>(a)]];
      for (int b = 0; b < k; ++b)
        h(a, b) = prob.moments.sigma(support[static_cast<std::size_t>(a)], support[static_cast<std::size_t>(b)]);
      h(a, a) += prob.markowitz.lambda_ridge;
    }
    const auto lip = estimate_lipschitz([&](const Eigen::VectorXd& x) { return (2.0 * (h * x)).eval(); }, k,
                                        /*seed=*/12345u, 1e-7, 1000);
    const double step = 1.0 / std::max(1.05 * lip.value, 1e-300);
    const auto project = [&](const Eigen::VectorXd& x) {
      return use_budgets ? project_budget_simplex(x, reduced) : project_simplex(x, 1.0);
    };
    const auto prox_step = [&](const Eigen::VectorXd& y) {
      return project(y - step * (2.0 * (h * y) - prob.markowitz.gamma_return * mu_k));
    };
    const auto value_at = [&](const Eigen::VectorXd& x) {
      return x.dot(h * x) - prob.markowitz.gamma_return * mu_k.dot(x);
    };

    FistaState st;
    st.x = project(uniform_weights(k));
    st.y = st.x;
    double prev = value_at(st.x);
    for (int it = 0; it < 20000; ++it) {
      FistaState next = fista_update(st, prox_step);
      const double val = value_at(next.x);
      if (val > prev) {  // momentum restart
        next.t = 1.0;
        next.y = next.x;
      }
      const double change = (next.x - st.x).lpNorm<Eigen::Infinity>();
      st = std::move(next);
      prev = val;
      if (change <= 1e-13) break;
    }
    for (int a = 0; a < k; ++a) sol.w[support[static_cast<std::size_t>(a)]] = st.x[a];
    sol.value = markowitz_value(sol.w, prob.moments, prob.markowitz);
    return sol;
  }

  // CVaR: minimize alpha + 1/(N(1-beta)) 1't over
  //   R_K w + alpha 1 + t >= 0, t >= 0, 1'w = 1, budget rows, w >= 0
  // with alpha split into two nonnegative parts.
  const Eigen::Index n_samples = prob.panel.returns.rows();
  const double scale = 1.0 / (static_cast<double>(n_samples) * (1.0 - prob.cvar.beta));
  int budget_rows = 0;
  if (use_budgets) {
    for (const auto& g : reduced.groups) {
      if (g.budget_min > 0.0) ++budget_rows;
      if (g.budget_max < 1.0) ++budget_rows;
    }
  }
  const int n_rows = static_cast<int>(n_samples) + 1 + budget_rows;
  const int n_cols = k + 2 + static_cast<int>(n_samples);
  LpProblem lp;
  lp.a.setZero(n_rows, n_cols);
  lp.b.setZero(n_rows);
  lp.c.setZero(n_cols);
  lp.rel.assign(static_cast<std::size_t>(n_rows), '<');
  for (int a = 0; a < k; ++a) lp.a.col(a).head(n_samples) = prob.panel.returns.col(support[static_cast<std::size_t>(a)]);
  lp.a.col(k).head(n_samples).setOnes();
  lp.a.col(k + 1).head(n_samples).setConstant(-1.0);
  lp.a.block(0, k + 2, n_samples, n_samples).setIdentity();
  for (Eigen::Index j = 0; j < n_samples; ++j) lp.rel[static_cast<std::size_t>(j)] = '>';
  int row = static_cast<int>(n_samples);
  lp.a.row(row).head(k).setOnes();
  lp.b[row] = 1.0;
  lp.rel[static_cast<std::size_t>(row)] = '=';
  ++row;
  if (use_budgets) {
    for (const auto& g : reduced.groups) {
      if (g.budget_min > 0.0) {
        for (const int i : g.indices) lp.a(row, i) = 1.0;
        lp.b[row] = g.budget_min;
        lp.rel[static_cast<std::size_t>(row)] = '>';
        ++row;
      }
      if (g.budget_max < 1.0) {
        for (const int i : g.indices) lp.a(row, i) = 1.0;
        lp.b[row] = g.budget_max;
        lp.rel[static_cast<std::size_t>(row)] = '<';
        ++row;
      }
    }
  }
  lp.c[k] = 1.0;
  lp.c[k + 1] = -1.0;
  lp.c.tail(n_samples).setConstant(scale);

  const LpResult res = solve_lp(lp);
  if (res.status == LpResult::Status::kInfeasible)
    throw std::runtime_error("restricted cvar solve: infeasible support/budget combination");
  if (res.status != LpResult::Status::kOptimal)
    throw std::runtime_error("restricted cvar solve: linear program did not converge");
  for (int a = 0; a < k; ++a) sol.w[support[static_cast<std::size_t>(a)]] = std::max(res.x[a], 0.0);
  const CvarValue cv = cvar_exact(sol.w, prob.panel.returns, prob.cvar.beta);
  sol.value = cv.phi;
  sol.alpha = cv.alpha;
  return sol;
}

/// True (unrelaxed) objective of a portfolio under the problem's criterion.
inline double true_objective(const ProblemSpec& prob, const Eigen::Ref<const Eigen::VectorXd>& w) {
  if (prob.model == Model::kMarkowitz) return markowitz_value(w, prob.moments, prob.markowitz);
  return cvar_exact(w, prob.panel.returns, prob.cvar.beta).phi;
}

/// Fixed-point residual || w - P(w - delta * grad) || of the w-block. P is the
/// plain simplex projection, or the combined sparse-simplex projection for the
/// no-grouping path (`topk` > 0).
inline double stationarity_residual(const PortfolioState& state, const ProblemSpec& prob, double delta,
                                    double nu = 0.0, int topk = 0) {
  Eigen::VectorXd grad;
  if (prob.model == Model::kMarkowitz) {
    grad = markowitz_grad(state.w, nu > 0.0 ? state.v : state.w, prob.moments, prob.markowitz, nu);
  } else {
    const Eigen::VectorXd& u = state.u;
    grad = cvar_grad_w(state.w, u, nu > 0.0 ? state.v : state.w, prob.panel.returns, prob.cvar, nu);
  }
  const Eigen::VectorXd stepped = state.w - delta * grad;
  const Eigen::VectorXd projected =
      topk > 0 ? project_simplex_topk(stepped, topk, 1.0) : project_simplex(stepped, 1.0);
  return (state.w - projected).norm();
}

namespace detail {

/// Auto continuation: geometric in nu, scaled by the smooth part's Lipschitz
/// constant. Early stages sit well below L so the w-block explores the
/// objective before the penalty hardens; the last stage is high enough to
/// drive the relaxation gap under the reporting threshold.
inline std::vector<double> effective_schedule(const SolverConfig& cfg, double smooth_lipschitz) {
  if (!cfg.nu_schedule.empty()) return cfg.nu_schedule;
  std::vector<double> s;
  const double base = std::max(smooth_lipschitz, 1e-12);
  for (int e = -2; e <= 6; ++e) s.push_back(base * std::pow(10.0, e));
  return s;
}

inline double step_size(const SolverConfig& cfg, double lipschitz) {
  if (cfg.step_mode == StepMode::kFixed) return cfg.fixed_step;
  return 1.0 / std::max(lipschitz, 1e-300);
}

/// Support for the feasible readout: nonzeros of v, widened to the whole
/// group wherever the cardinality cap is slack.
inline std::vector<int> readout_support(const Eigen::VectorXd& v, const GroupPartition& part) {
  std::vector<int> support;
  for (const auto& g : part.groups) {
    if (g.max_assets >= static_cast<int>(g.indices.size())) {
      support.insert(support.end(), g.indices.begin(), g.indices.end());
    } else {
      for (const int i : g.indices)
        if (v[i] != 0.0) support.push_back(i);
    }
  }
  std::sort(support.begin(), support.end());
  return support;
}

struct Stopwatch {
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  }
};

inline void finish_report(SolveReport& rep, const ProblemSpec& prob, double delta, double nu, int topk) {
  std::vector<int> support = readout_support(rep.state.v, prob.partition);
  if (support.empty()) support = readout_support(project_omega(rep.state.w, prob.partition), prob.partition);
  const bool budgeted = any_nontrivial_budget(prob.partition);
  const RestrictedSolution sol = restricted_solve(prob, support, budgeted ? &prob.partition : nullptr);
  rep.portfolio = sol.w;
  rep.portfolio_value = sol.value;
  rep.portfolio_alpha = sol.alpha;
  rep.relax_gap = (rep.state.w - rep.state.v).norm();
  rep.stationarity_residual = stationarity_residual(rep.state, prob, delta, nu, topk);
}

}  // namespace detail

/// PALM with continuation for the relaxed Markowitz problem (optionally FISTA
/// accelerated on the w block).
inline SolveReport palm_markowitz(const ProblemSpec& prob, const SolverConfig& cfg,
                                  const std::optional<Eigen::VectorXd>& w_start = std::nullopt) {
  prob.validate();
  cfg.validate();
  if (prob.model != Model::kMarkowitz) throw std::invalid_argument("palm_markowitz: problem is not markowitz");
  if (cfg.restarts > 0 && !w_start) {
    const detail::Stopwatch clock;
    SolverConfig single = cfg;
    single.restarts = 0;
    SolveReport best = palm_markowitz(prob, single);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    for (int r = 0; r < cfg.restarts; ++r) {
      SolveReport rep = palm_markowitz(prob, single, random_simplex_point(prob.n_assets(), rng));
      if (rep.portfolio_value < best.portfolio_value) best = std::move(rep);
    }
    best.wall_time = clock.seconds();
    return best;
  }
  const detail::Stopwatch clock;
  const int n = prob.n_assets();

  const auto lip = estimate_lipschitz(
      [&](const Eigen::VectorXd& x) {
        return (2.0 * (prob.moments.sigma * x) + 2.0 * prob.markowitz.lambda_ridge * x).eval();
      },
      n, cfg.seed, 1e-9, 2000);
  const double l_f = 1.02 * lip.value;  // margin: power iteration approaches from below
  const std::vector<double> schedule = detail::effective_schedule(cfg, l_f);

  SolveReport rep;
  rep.lipschitz_converged = lip.converged;
  PortfolioState& s = rep.state;
  s.w = w_start.value_or(uniform_weights(n));
  s.v = project_omega(s.w, prob.partition);

  double delta = 0.0, nu_final = 0.0;
  for (const double nu : schedule) {
    nu_final = nu;
    delta = detail::step_size(cfg, l_f + nu);
    const auto prox_step = [&](const Eigen::VectorXd& y) {
      return project_simplex(y - delta * markowitz_grad(y, s.v, prob.moments, prob.markowitz, nu), 1.0);
    };
    FistaState fw{1.0, s.w, s.w};
    double prev_obj = std::numeric_limits<double>::infinity();
    rep.converged = false;
    for (int it = 0; it < cfg.max_iters; ++it) {
      const Eigen::VectorXd w_old = s.w;
      const Eigen::VectorXd v_old = s.v;
      if (cfg.accelerate) {
        fw = fista_update(fw, prox_step, cfg.fista_form);
        s.w = fw.x;
      } else {
        s.w = prox_step(s.w);
      }
      s.v = project_omega(s.w, prob.partition);
      const double obj =
          markowitz_value(s.w, prob.moments, prob.markowitz) + 0.5 * nu * (s.w - s.v).squaredNorm();
      if (!cfg.accelerate && obj > prev_obj + 1e-10)
        throw std::runtime_error("palm_markowitz: descent violation at iteration " +
                                 std::to_string(rep.iterations) + " (" + std::to_string(prev_obj) + " -> " +
                                 std::to_string(obj) + ")");
      if (cfg.accelerate && obj > prev_obj) {
        fw.t = 1.0;
        fw.y = fw.x;
      }
      prev_obj = obj;
      rep.objective_trace.push_back(obj);
      ++rep.iterations;
      if (cfg.on_iterate) cfg.on_iterate(rep.iterations, s);
      if ((s.w - w_old).lpNorm<Eigen::Infinity>() <= cfg.tol &&
          (s.v - v_old).lpNorm<Eigen::Infinity>() <= cfg.tol) {
        rep.converged = true;
        break;
      }
    }
    rep.stage_gaps.push_back((s.w - s.v).norm());
  }
  detail::finish_report(rep, prob, delta, nu_final, 0);
  rep.wall_time = clock.seconds();
  return rep;
}

/// Accelerated PALM for the relaxed CVaR problem: FISTA steps on w and u,
/// exact projection on v, alpha recovered in closed form at exit.
inline SolveReport palm_cvar(const ProblemSpec& prob, const SolverConfig& cfg,
                             const std::optional<Eigen::VectorXd>& w_start = std::nullopt) {
  prob.validate();
  cfg.validate();
  if (prob.model != Model::kCvar) throw std::invalid_argument("palm_cvar: problem is not cvar");
  if (cfg.restarts > 0 && !w_start) {
    const detail::Stopwatch clock;
    SolverConfig single = cfg;
    single.restarts = 0;
    SolveReport best = palm_cvar(prob, single);
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    for (int r = 0; r < cfg.restarts; ++r) {
      SolveReport rep = palm_cvar(prob, single, random_simplex_point(prob.n_assets(), rng));
      if (rep.portfolio_value < best.portfolio_value) best = std::move(rep);
    }
    best.wall_time = clock.seconds();
    return best;
  }
  const detail::Stopwatch clock;
  const int n = prob.n_assets();
  const Eigen::MatrixXd& r = prob.panel.returns;
  const int n_samples = static_cast<int>(r.rows());
  const double rho = prob.cvar.rho_relax;

  const auto lip = estimate_lipschitz(
      [&](const Eigen::VectorXd& x) { return (r.transpose() * centered(r * x)).eval(); }, n, cfg.seed, 1e-9,
      2000);
  const double l_data = 1.02 * rho * lip.value;
  const std::vector<double> schedule = detail::effective_schedule(cfg, l_data);
  const double delta_u = 1.0 / rho;

  SolveReport rep;
  rep.lipschitz_converged = lip.converged;
  PortfolioState& s = rep.state;
  s.w = w_start.value_or(uniform_weights(n));
  s.v = project_omega(s.w, prob.partition);
  const CvarValue at_start = cvar_exact(s.w, r, prob.cvar.beta);
  s.u = (-(r * s.w).array() - at_start.alpha).matrix();

  double delta_w = 0.0, nu_final = 0.0;
  for (const double nu : schedule) {
    nu_final = nu;
    delta_w = detail::step_size(cfg, l_data + nu);
    const auto w_step = [&](const Eigen::VectorXd& y) {
      return project_simplex(y - delta_w * cvar_grad_w(y, s.u, s.v, r, prob.cvar, nu), 1.0);
    };
    const auto u_step = [&](const Eigen::VectorXd& y) {
      return hinge_prox(y - delta_u * cvar_grad_u(s.w, y, r, prob.cvar), delta_u, prob.cvar.beta, n_samples);
    };
    FistaState fw{1.0, s.w, s.w};
    FistaState fu{1.0, s.u, s.u};
    double prev_obj = std::numeric_limits<double>::infinity();
    rep.converged = false;
    for (int it = 0; it < cfg.max_iters; ++it) {
      const Eigen::VectorXd w_old = s.w;
      const Eigen::VectorXd v_old = s.v;
      if (cfg.accelerate) {
        fw = fista_update(fw, w_step, cfg.fista_form);
        s.w = fw.x;
        fu = fista_update(fu, u_step, cfg.fista_form);
        s.u = fu.x;
      } else {
        s.w = w_step(s.w);
        s.u = u_step(s.u);
      }
      s.v = project_omega(s.w, prob.partition);
      const double obj = cvar_relaxed_value(s.w, s.u, s.v, r, prob.cvar, nu);
      if (!cfg.accelerate && obj > prev_obj + 1e-10)
        throw std::runtime_error("palm_cvar: descent violation at iteration " + std::to_string(rep.iterations) +
                                 " (" + std::to_string(prev_obj) + " -> " + std::to_string(obj) + ")");
      if (cfg.accelerate && obj > prev_obj) {
        fw.t = 1.0;
        fw.y = fw.x;
        fu.t = 1.0;
        fu.y = fu.x;
      }
      prev_obj = obj;
      rep.objective_trace.push_back(obj);
      ++rep.iterations;
      if (cfg.on_iterate) cfg.on_iterate(rep.iterations, s);
      if ((s.w - w_old).lpNorm<Eigen::Infinity>() <= cfg.tol &&
          (s.v - v_old).lpNorm<Eigen::Infinity>() <= cfg.tol) {
        rep.converged = true;
        break;
      }
    }
    rep.stage_gaps.push_back((s.w - s.v).norm());
  }
  s.alpha = alpha_star(s.w, s.u, r, rho);
  detail::finish_report(rep, prob, delta_w, nu_final, 0);
  rep.wall_time = clock.seconds();
  return rep;
}

/// No-grouping fast path: proximal gradient directly on the sparse simplex
/// {w >= 0, 1'w = 1, ||w||_0 <= k}, no auxiliary v. The CVaR variant keeps the
/// hinge split through u.
inline SolveReport prox_grad_global_k(const ProblemSpec& prob, const SolverConfig& cfg,
                                      const std::optional<Eigen::VectorXd>& w_start = std::nullopt) {
  prob.validate();
  cfg.validate();
  if (prob.partition.groups.size() != 1 || !detail::trivial_budget(prob.partition.groups.front()))
    throw std::invalid_argument("prox_grad_global_k: needs a single all-asset group with budgets [0,1]");
  const int k = prob.partition.groups.front().max_assets;
  const detail::Stopwatch clock;
  const int n = prob.n_assets();
  const Eigen::MatrixXd& r = prob.panel.returns;

  SolveReport rep;
  PortfolioState& s = rep.state;
  s.w = w_start.value_or(uniform_weights(n));

  double delta_w = 0.0;
  if (prob.model == Model::kMarkowitz) {
    const auto lip = estimate_lipschitz(
        [&](const Eigen::VectorXd& x) {
          return (2.0 * (prob.moments.sigma * x) + 2.0 * prob.markowitz.lambda_ridge * x).eval();
        },
        n, cfg.seed, 1e-9, 2000);
    rep.lipschitz_converged = lip.converged;
    delta_w = detail::step_size(cfg, 1.02 * lip.value);
    const auto prox_step = [&](const Eigen::VectorXd& y) {
      return project_simplex_topk(
          y - delta_w * markowitz_grad(y, y, prob.moments, prob.markowitz, 0.0), k, 1.0);
    };
    FistaState fw{1.0, s.w, s.w};
    double prev_obj = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_iters; ++it) {
      const Eigen::VectorXd w_old = s.w;
      if (cfg.accelerate) {
        fw = fista_update(fw, prox_step, cfg.fista_form);
        s.w = fw.x;
      } else {
        s.w = prox_step(s.w);
      }
      const double obj = markowitz_value(s.w, prob.moments, prob.markowitz);
      if (!cfg.accelerate && obj > prev_obj + 1e-10)
        throw std::runtime_error("prox_grad_global_k: descent violation at iteration " + std::to_string(it));
      if (cfg.accelerate && obj > prev_obj) {
        fw.t = 1.0;
        fw.y = fw.x;
      }
      prev_obj = obj;
      rep.objective_trace.push_back(obj);
      ++rep.iterations;
      if (cfg.on_iterate) cfg.on_iterate(rep.iterations, s);
      if ((s.w - w_old).lpNorm<Eigen::Infinity>() <= cfg.tol) {
        rep.converged = true;
        break;
      }
    }
  } else {
    const int n_samples = static_cast<int>(r.rows());
    const double rho = prob.cvar.rho_relax;
    const auto lip = estimate_lipschitz(
        [&](const Eigen::VectorXd& x) { return (r.transpose() * centered(r * x)).eval(); }, n, cfg.seed, 1e-9,
        2000);
    rep.lipschitz_converged = lip.converged;
    delta_w = detail::step_size(cfg, 1.02 * rho * lip.value);
    const double delta_u = 1.0 / rho;
    const CvarValue at_start = cvar_exact(s.w, r, prob.cvar.beta);
    s.u = (-(r * s.w).array() - at_start.alpha).matrix();
    const auto w_step = [&](const Eigen::VectorXd& y) {
      return project_simplex_topk(y - delta_w * cvar_grad_w(y, s.u, y, r, prob.cvar, 0.0), k, 1.0);
    };
    const auto u_step = [&](const Eigen::VectorXd& y) {
      return hinge_prox(y - delta_u * cvar_grad_u(s.w, y, r, prob.cvar), delta_u, prob.cvar.beta, n_samples);
    };
    FistaState fw{1.0, s.w, s.w};
    FistaState fu{1.0, s.u, s.u};
    double prev_obj = std::numeric_limits<double>::infinity();
    for (int it = 0; it < cfg.max_iters; ++it) {
      const Eigen::VectorXd w_old = s.w;
      const Eigen::VectorXd u_old = s.u;
      if (cfg.accelerate) {
        fw = fista_update(fw, w_step, cfg.fista_form);
        s.w = fw.x;
        fu = fista_update(fu, u_step, cfg.fista_form);
        s.u = fu.x;
      } else {
        s.w = w_step(s.w);
        s.u = u_step(s.u);
      }
      const double obj = cvar_relaxed_value(s.w, s.u, s.w, r, prob.cvar, 0.0);
      if (!cfg.accelerate && obj > prev_obj + 1e-10)
        throw std::runtime_error("prox_grad_global_k: descent violation at iteration " + std::to_string(it));
      if (cfg.accelerate && obj > prev_obj) {
        fw.t = 1.0;
        fw.y = fw.x;
        fu.t = 1.0;
        fu.y = fu.x;
      }
      prev_obj = obj;
      rep.objective_trace.push_back(obj);
      ++rep.iterations;
      if (cfg.on_iterate) cfg.on_iterate(rep.iterations, s);
      if ((s.w - w_old).lpNorm<Eigen::Infinity>() <= cfg.tol &&
          (s.u - u_old).lpNorm<Eigen::Infinity>() <= cfg.tol) {
        rep.converged = true;
        break;
      }
    }
    s.alpha = alpha_star(s.w, s.u, r, rho);
  }

  s.v = s.w;  // no relaxation on this path
  std::vector<int> support;
  for (int i = 0; i < n; ++i)
    if (s.w[i] != 0.0) support.push_back(i);
  const RestrictedSolution sol = restricted_solve(prob, support);
  rep.portfolio = sol.w;
  rep.portfolio_value = sol.value;
  rep.portfolio_alpha = sol.alpha;
  rep.relax_gap = 0.0;
  rep.stationarity_residual = stationarity_residual(s, prob, delta_w, 0.0, k);
  rep.wall_time = clock.seconds();
  return rep;
}

/// Dispatch on the problem's model.
inline SolveReport solve(const ProblemSpec& prob, const SolverConfig& cfg,
                         const std::optional<Eigen::VectorXd>& w_start = std::nullopt) {
  return prob.model == Model::kMarkowitz ? palm_markowitz(prob, cfg, w_start) : palm_cvar(prob, cfg, w_start);
}

}  // namespace cardport
