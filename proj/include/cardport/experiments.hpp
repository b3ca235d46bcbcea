// Desk-scale study harnesses: efficient frontier
// sweeps, the stationary-point escape table, and the brute-force comparison
// (histograms + timing). Everything is seeded and emits CSV with a comment
// line carrying the config hash and seed.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "cardport/io.hpp"
#include "cardport/oracle.hpp"
#include "cardport/solver.hpp"

namespace cardport {

/// Default experiment universe: 65 assets in 7 sectors, 251 samples.
inline ReturnsPanel default_universe(std::uint64_t seed = 20180621u) {
  return synth_returns(65, 251, even_sector_sizes(65, 7), seed);
}

/// Partition built from the panel's sector labels: one group per sector with
/// cardinality cap `k_per_sector`; sectors named in `excluded` are kept as
/// groups pinned to zero budget (q = 0, k = 1).
inline GroupPartition sector_partition(const ReturnsPanel& panel, int k_per_sector,
                                       const std::vector<std::string>& excluded = {}) {
  if (panel.sectors.empty()) throw std::invalid_argument("sector_partition: panel has no sector labels");
  std::vector<std::string> order;
  for (const auto& s : panel.sectors)
    if (std::find(order.begin(), order.end(), s) == order.end()) order.push_back(s);
  GroupPartition part;
  part.n_assets = panel.n_assets();
  for (const auto& name : order) {
    GroupSpec g;
    g.name = name;
    for (int i = 0; i < panel.n_assets(); ++i)
      if (panel.sectors[static_cast<std::size_t>(i)] == name) g.indices.push_back(i);
    const bool out = std::find(excluded.begin(), excluded.end(), name) != excluded.end();
    if (out) {
      g.budget_max = 0.0;
      g.max_assets = 1;
    } else {
      g.max_assets = std::min<int>(k_per_sector, static_cast<int>(g.indices.size()));
    }
    part.groups.push_back(std::move(g));
  }
  part.validate();
  return part;
}

struct FrontierPoint {
  double parameter = 0.0;  // gamma or beta
  double risk = 0.0;       // variance, or beta-CVaR phi
  double reward = 0.0;     // mean return, or beta-VaR alpha
  Eigen::VectorXd weights;
};

struct FrontierCurve {
  std::string label;
  std::vector<FrontierPoint> points;
  std::vector<std::string> errors;  // per-point failures, sweep continues
};

struct FrontierVariant {
  std::string label;
  GroupPartition partition;
};

/// Markowitz frontier: for each gamma and each constraint variant, solve and
/// record (variance, mean return, weights).
inline void require_increasing(const std::vector<double>& grid, const char* what) {
  if (grid.empty()) throw std::invalid_argument(std::string(what) + ": empty parameter grid");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument(std::string(what) + ": parameter grid must be strictly increasing");
}

inline std::vector<FrontierCurve> frontier_markowitz(const ReturnsPanel& panel,
                                                     const std::vector<FrontierVariant>& variants,
                                                     const std::vector<double>& gamma_grid,
                                                     double lambda_ridge, const SolverConfig& cfg) {
  require_increasing(gamma_grid, "frontier_markowitz");
  std::vector<FrontierCurve> curves;
  for (const auto& variant : variants) {
    FrontierCurve curve;
    curve.label = variant.label;
    for (const double gamma : gamma_grid) {
      try {
        const ProblemSpec prob = make_problem(panel, variant.partition, Model::kMarkowitz,
                                              MarkowitzParams{gamma, lambda_ridge});
        const SolveReport rep = palm_markowitz(prob, cfg);
        FrontierPoint pt;
        pt.parameter = gamma;
        pt.risk = rep.portfolio.dot(prob.moments.sigma * rep.portfolio);
        pt.reward = prob.moments.mu.dot(rep.portfolio);
        pt.weights = rep.portfolio;
        curve.points.push_back(std::move(pt));
      } catch (const std::exception& e) {
        curve.errors.push_back("gamma=" + std::to_string(gamma) + ": " + e.what());
      }
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

/// CVaR frontier: for each beta and variant, solve and record (phi, alpha)
/// evaluated by the exact superquantile at the reported portfolio.
inline std::vector<FrontierCurve> frontier_cvar(const ReturnsPanel& panel,
                                                const std::vector<FrontierVariant>& variants,
                                                const std::vector<double>& beta_grid, double rho_relax,
                                                const SolverConfig& cfg) {
  require_increasing(beta_grid, "frontier_cvar");
  for (const double b : beta_grid)
    if (!(b > 0.0 && b < 1.0)) throw std::invalid_argument("frontier_cvar: beta grid must lie in (0,1)");
  std::vector<FrontierCurve> curves;
  for (const auto& variant : variants) {
    FrontierCurve curve;
    curve.label = variant.label;
    for (const double beta : beta_grid) {
      try {
        const ProblemSpec prob =
            make_problem(panel, variant.partition, Model::kCvar, {}, CvarParams{beta, rho_relax});
        const SolveReport rep = palm_cvar(prob, cfg);
        const CvarValue cv = cvar_exact(rep.portfolio, prob.panel.returns, beta);
        FrontierPoint pt;
        pt.parameter = beta;
        pt.risk = cv.phi;
        pt.reward = cv.alpha;
        pt.weights = rep.portfolio;
        curve.points.push_back(std::move(pt));
      } catch (const std::exception& e) {
        curve.errors.push_back("beta=" + std::to_string(beta) + ": " + e.what());
      }
    }
    curves.push_back(std::move(curve));
  }
  return curves;
}

struct EscapeCell {
  std::string model;
  int n_assets = 0;
  int cardinality = 0;
  int trials = 0;
  double fraction = 0.0;  // share of trials where the solver improved on the restricted optimum
};

/// Stationary-point escape study. Per trial: draw a random support K, solve
/// the restricted convex problem, restart the no-grouping solver from that
/// point and count the trial when it ends strictly below the restricted
/// optimum (threshold 1e-9). The solver can only improve: if its readout is
/// somehow worse, the start point is kept.
inline std::vector<EscapeCell> escape_experiment(const ReturnsPanel& universe, const std::vector<int>& n_list,
                                                 const std::vector<int>& k_list, int trials, Model model,
                                                 std::uint64_t seed, const SolverConfig& base_cfg = {},
                                                 const MarkowitzParams& mk_params = {0.1, 0.0},
                                                 const CvarParams& cvar_params = {}) {
  if (trials < 1) throw std::invalid_argument("escape_experiment: trials must be positive");
  std::vector<EscapeCell> table;
  for (const int n : n_list) {
    if (n < 1 || n > universe.n_assets())
      throw std::invalid_argument("escape_experiment: n exceeds the universe size");
    ReturnsPanel sub;
    sub.tickers.assign(universe.tickers.begin(), universe.tickers.begin() + n);
    sub.returns = universe.returns.leftCols(n);
    for (const int k : k_list) {
      if (k > n) throw std::invalid_argument("escape_experiment: k exceeds n");
      const ProblemSpec prob =
          make_problem(sub, GroupPartition::single_group(n, k), model, mk_params, cvar_params);
      std::mt19937_64 rng(seed ^ (static_cast<std::uint64_t>(n) << 32) ^ static_cast<std::uint64_t>(k));
      std::vector<int> pool(static_cast<std::size_t>(n));
      std::iota(pool.begin(), pool.end(), 0);
      int improved = 0;
      for (int trial = 0; trial < trials; ++trial) {
        for (int i = 0; i < k; ++i) {
          std::uniform_int_distribution<int> pick(i, n - 1);
          std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
        }
        std::vector<int> support(pool.begin(), pool.begin() + k);
        std::sort(support.begin(), support.end());
        const RestrictedSolution start = restricted_solve(prob, support);
        SolverConfig cfg = base_cfg;
        cfg.seed = seed + static_cast<std::uint64_t>(trial);
        const SolveReport rep = prox_grad_global_k(prob, cfg, start.w);
        const double final_value = std::min(rep.portfolio_value, start.value);
        if (final_value < start.value - 1e-9) ++improved;
      }
      EscapeCell cell;
      cell.model = model_name(model);
      cell.n_assets = n;
      cell.cardinality = k;
      cell.trials = trials;
      cell.fraction = static_cast<double>(improved) / static_cast<double>(trials);
      table.push_back(cell);
    }
  }
  return table;
}

struct ComparisonResult {
  int n_assets = 0;
  int cardinality = 0;
  double solver_value = 0.0;
  double best_value = 0.0;
  double quantile_rank = 0.0;  // share of subsets strictly better than the solver
  std::vector<double> all_values;
};

/// Histogram study: exhaustive subset values plus where the solver lands.
inline ComparisonResult brute_force_comparison(const ProblemSpec& prob, int k, const SolverConfig& cfg,
                                               std::uint64_t cap = 2'000'000) {
  const OracleResult oracle = exhaustive_search(prob, k, /*keep_values=*/true, cap);
  ProblemSpec sparse = prob;
  sparse.partition = GroupPartition::single_group(prob.n_assets(), k);
  const SolveReport rep = solve(sparse, cfg);
  ComparisonResult out;
  out.n_assets = prob.n_assets();
  out.cardinality = k;
  out.solver_value = rep.portfolio_value;
  out.best_value = oracle.best_value;
  out.all_values = oracle.all_values;
  std::uint64_t better = 0;
  const double tol = 1e-9 * std::max(1.0, std::abs(rep.portfolio_value));
  for (const double v : out.all_values)
    if (v < out.solver_value - tol) ++better;
  out.quantile_rank = static_cast<double>(better) / static_cast<double>(out.all_values.size());
  return out;
}

struct TimingRow {
  int trial = 0;
  std::string method;  // "solver" or "randomized"
  double elapsed_seconds = 0.0;
  bool matched = true;
};

/// Table-style timing comparison: per trial, time one solver run, then time a
/// randomized subset search until it matches the solver's value.
inline std::vector<TimingRow> timing_comparison(const ProblemSpec& prob, int k, int trials,
                                                const SolverConfig& cfg, double time_cap_seconds,
                                                std::uint64_t seed) {
  ProblemSpec sparse = prob;
  sparse.partition = GroupPartition::single_group(prob.n_assets(), k);
  std::vector<TimingRow> rows;
  for (int trial = 0; trial < trials; ++trial) {
    const SolveReport rep = solve(sparse, cfg);
    rows.push_back({trial, "solver", rep.wall_time, true});
    const SearchUntilResult search =
        randomized_search_until(sparse, k, rep.portfolio_value, time_cap_seconds, seed + static_cast<std::uint64_t>(trial));
    rows.push_back({trial, "randomized", search.elapsed_seconds, search.matched});
  }
  return rows;
}

// ---- CSV emission ---------------------------------------------------------

inline std::string csv_stamp(std::uint64_t config_hash, std::uint64_t seed) {
  return "# config=" + hex64(config_hash) + " seed=" + std::to_string(seed) + "\n";
}

/// `label,parameter,risk,reward,w_0..w_{n-1}`
inline std::string frontier_to_csv(const std::vector<FrontierCurve>& curves, int n_assets,
                                   std::uint64_t config_hash, std::uint64_t seed) {
  std::ostringstream out;
  out << csv_stamp(config_hash, seed);
  out << "label,parameter,risk,reward";
  for (int i = 0; i < n_assets; ++i) out << ",w_" << i;
  out << '\n';
  for (const auto& curve : curves) {
    for (const auto& pt : curve.points) {
      out << curve.label << ',' << format_double(pt.parameter) << ',' << format_double(pt.risk) << ','
          << format_double(pt.reward);
      for (int i = 0; i < n_assets; ++i) out << ',' << format_double(pt.weights[i]);
      out << '\n';
    }
  }
  return out.str();
}

/// `model,n,k,trials,fraction`
inline std::string escape_to_csv(const std::vector<EscapeCell>& table, std::uint64_t config_hash,
                                 std::uint64_t seed) {
  std::ostringstream out;
  out << csv_stamp(config_hash, seed);
  out << "model,n,k,trials,fraction\n";
  for (const auto& cell : table)
    out << cell.model << ',' << cell.n_assets << ',' << cell.cardinality << ',' << cell.trials << ','
        << format_double(cell.fraction) << '\n';
  return out.str();
}

/// `subset_rank,value` in colex rank order.
inline std::string histogram_to_csv(const std::vector<double>& values, std::uint64_t config_hash,
                                    std::uint64_t seed) {
  std::ostringstream out;
  out << csv_stamp(config_hash, seed);
  out << "subset_rank,value\n";
  for (std::size_t i = 0; i < values.size(); ++i) out << i << ',' << format_double(values[i]) << '\n';
  return out.str();
}

/// `trial,method,elapsed_seconds,matched`
inline std::string timing_to_csv(const std::vector<TimingRow>& rows, std::uint64_t config_hash,
                                 std::uint64_t seed) {
  std::ostringstream out;
  out << csv_stamp(config_hash, seed);
  out << "trial,method,elapsed_seconds,matched\n";
  for (const auto& row : rows)
    out << row.trial << ',' << row.method << ',' << format_double(row.elapsed_seconds) << ','
        << (row.matched ? "true" : "false") << '\n';
  return out.str();
}

}  // namespace cardport
