// Acceptance suite. Each criterion prints one [PASS]/[FAIL] line; the exit
// code is the number of failures. Run all criteria with no arguments or pass
// a subset of criterion numbers (1..7).

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "cardport/experiments.hpp"
#include "cardport/oracle.hpp"
#include "cardport/solver.hpp"
#include "support/oracles.hpp"

using namespace cardport;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr std::uint64_t kBaseSeed = 20180621u;

ProblemSpec instance_10choose5(int index, Model model) {
  const ReturnsPanel panel = synth_returns(10, 100, even_sector_sizes(10, 2), kBaseSeed + index);
  return make_problem(panel, GroupPartition::single_group(10, 5), model, MarkowitzParams{0.1, 0.0},
                      CvarParams{0.9, 20.0});
}

// C1: the Markowitz solver matches the exhaustive optimum (relative 1e-6) on
// at least 18 of 20 seeded 10-choose-5 instances.
bool criterion1(std::string& detail) {
  int hits = 0;
  for (int i = 0; i < 20; ++i) {
    const ProblemSpec prob = instance_10choose5(i, Model::kMarkowitz);
    SolverConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(i);
    const SolveReport rep = palm_markowitz(prob, cfg);
    const OracleResult oracle = exhaustive_search(prob, 5);
    const double diff = std::abs(rep.portfolio_value - oracle.best_value);
    if (diff <= 1e-6 * std::max(1.0, std::abs(oracle.best_value))) ++hits;
  }
  detail = "global optimum matched on " + std::to_string(hits) + "/20 instances (need >= 18)";
  return hits >= 18;
}

// C2: the CVaR solver lands in the bottom 2% of the subset-value distribution
// on at least 16 of 20 instances (beta = 0.9).
bool criterion2(std::string& detail) {
  int hits = 0;
  double worst_rank = 0.0;
  for (int i = 0; i < 20; ++i) {
    const ProblemSpec prob = instance_10choose5(i, Model::kCvar);
    SolverConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(i);
    const SolveReport rep = palm_cvar(prob, cfg);
    const OracleResult oracle = exhaustive_search(prob, 5, /*keep_values=*/true);
    std::uint64_t better = 0;
    for (const double v : oracle.all_values)
      if (v < rep.portfolio_value - 1e-9) ++better;
    const double rank = static_cast<double>(better) / static_cast<double>(oracle.all_values.size());
    worst_rank = std::max(worst_rank, rank);
    if (rank <= 0.02) ++hits;
  }
  detail = "bottom-2% rank achieved on " + std::to_string(hits) + "/20 instances (need >= 16, worst rank " +
           std::to_string(worst_rank) + ")";
  return hits >= 16;
}

// C3: choosing 10 of 30, mean solver time beats mean randomized-search-until-
// match time for both criteria, and the Markowitz solver averages under 1 s.
bool criterion3(std::string& detail) {
  const ReturnsPanel panel = synth_returns(30, 251, even_sector_sizes(30, 7), kBaseSeed);
  bool ok = true;
  detail.clear();
  for (const Model model : {Model::kMarkowitz, Model::kCvar}) {
    const ProblemSpec prob = make_problem(panel, GroupPartition::single_group(30, 10), model,
                                          MarkowitzParams{0.1, 0.0}, CvarParams{0.9, 20.0});
    SolverConfig cfg;
    cfg.seed = 1;
    const auto rows = timing_comparison(prob, 10, 20, cfg, /*time_cap_seconds=*/5.0, kBaseSeed);
    double solver_mean = 0.0, search_mean = 0.0;
    for (const auto& row : rows) (row.method == "solver" ? solver_mean : search_mean) += row.elapsed_seconds;
    solver_mean /= 20.0;
    search_mean /= 20.0;
    if (!(solver_mean < search_mean)) ok = false;
    if (model == Model::kMarkowitz && !(solver_mean < 1.0)) ok = false;
    detail += std::string(model_name(model)) + ": solver " + std::to_string(solver_mean) + "s vs search " +
              std::to_string(search_mean) + "s; ";
  }
  detail += "(ordering required, markowitz solver < 1s)";
  return ok;
}

// C4: escape table structure on the synthetic universe, 100 trials per cell:
// the k = 1 column is exactly zero and fractions are nondecreasing in k
// within 0.05 sampling slack.
bool criterion4(std::string& detail) {
  const ReturnsPanel universe = default_universe();
  const std::vector<int> n_list{15, 30, 45};
  const std::vector<int> k_list{1, 2, 3, 4};
  bool ok = true;
  detail.clear();
  for (const Model model : {Model::kMarkowitz, Model::kCvar}) {
    const auto table = escape_experiment(universe, n_list, k_list, 100, model, kBaseSeed, SolverConfig{},
                                         MarkowitzParams{0.1, 0.0}, CvarParams{0.9, 20.0});
    detail += std::string(model_name(model)) + ":";
    for (std::size_t row = 0; row < n_list.size(); ++row) {
      double prev = -1.0;
      for (std::size_t col = 0; col < k_list.size(); ++col) {
        const EscapeCell& cell = table[row * k_list.size() + col];
        detail += " " + std::to_string(cell.fraction).substr(0, 4);
        if (cell.cardinality == 1 && cell.fraction != 0.0) ok = false;
        if (prev >= 0.0 && cell.fraction < prev - 0.05) ok = false;
        prev = cell.fraction;
      }
      detail += " |";
    }
    detail += "  ";
  }
  return ok;
}

// C5: frontier dominance, both models: at every grid point the constrained
// objective is no better than the unconstrained one (slack 1e-8).
bool criterion5(std::string& detail) {
  const ReturnsPanel panel = default_universe();
  std::vector<FrontierVariant> variants;
  variants.push_back({"unconstrained", GroupPartition::single_group(panel.n_assets(), panel.n_assets())});
  variants.push_back({"ex1-k2", sector_partition(panel, 2, {"S4"})});
  variants.push_back({"ex2-k2", sector_partition(panel, 2, {"S4", "S5"})});
  SolverConfig cfg;

  bool ok = true;
  int checked = 0;
  std::vector<double> gamma_grid;
  for (int i = 0; i < 31; ++i) gamma_grid.push_back(1.5 * i / 30.0);
  const auto mk_curves = frontier_markowitz(panel, variants, gamma_grid, 0.0, cfg);
  for (const auto& curve : mk_curves)
    if (!curve.errors.empty()) ok = false;
  for (std::size_t i = 0; i < gamma_grid.size() && ok; ++i) {
    const double gamma = gamma_grid[i];
    const auto objective = [&](const FrontierPoint& pt) { return pt.risk - gamma * pt.reward; };
    for (std::size_t v = 1; v < mk_curves.size(); ++v) {
      ++checked;
      if (objective(mk_curves[v].points[i]) < objective(mk_curves[0].points[i]) - 1e-8) ok = false;
    }
  }

  std::vector<double> beta_grid;
  for (int i = 0; i < 10; ++i) beta_grid.push_back(0.5 + 0.05 * i);
  const auto cv_curves = frontier_cvar(panel, variants, beta_grid, 20.0, cfg);
  for (const auto& curve : cv_curves)
    if (!curve.errors.empty()) ok = false;
  for (std::size_t i = 0; i < beta_grid.size() && ok; ++i) {
    for (std::size_t v = 1; v < cv_curves.size(); ++v) {
      ++checked;
      if (cv_curves[v].points[i].risk < cv_curves[0].points[i].risk - 1e-8) ok = false;
    }
  }
  detail = std::to_string(checked) + " constrained-vs-unconstrained comparisons held to 1e-8";
  return ok;
}

// C6: with beta = 0.9 and per-sector k = 5, FISTA reaches the plain solver's
// final relaxed objective (to 1e-6) in strictly fewer iterations, 5 seeds.
bool criterion6(std::string& detail) {
  bool ok = true;
  detail.clear();
  for (int s = 0; s < 5; ++s) {
    const ReturnsPanel panel = synth_returns(65, 251, even_sector_sizes(65, 7), kBaseSeed + 100 + s);
    const ProblemSpec prob =
        make_problem(panel, sector_partition(panel, 5), Model::kCvar, {}, CvarParams{0.9, 20.0});
    // one continuation stage so both traces optimize the same objective
    const auto lip = estimate_lipschitz(
        [&](const VectorXd& x) { return (prob.panel.returns.transpose() * centered(prob.panel.returns * x)).eval(); },
        prob.n_assets(), 1, 1e-9, 2000);
    SolverConfig plain;
    plain.nu_schedule = {0.3 * 1.02 * prob.cvar.rho_relax * lip.value};
    plain.accelerate = false;
    plain.restarts = 0;  // one run each so the iteration counts compare
    plain.max_iters = 12000;
    plain.tol = 1e-8;
    plain.seed = 1;
    SolverConfig accel = plain;
    accel.accelerate = true;
    const SolveReport rep_plain = palm_cvar(prob, plain);
    const SolveReport rep_accel = palm_cvar(prob, accel);
    const double target = rep_plain.objective_trace.back() + 1e-6;
    int reach = -1;
    for (std::size_t i = 0; i < rep_accel.objective_trace.size(); ++i)
      if (rep_accel.objective_trace[i] <= target) {
        reach = static_cast<int>(i) + 1;
        break;
      }
    if (reach < 1 || reach >= rep_plain.iterations) ok = false;
    detail += "seed" + std::to_string(s) + ": " + std::to_string(reach) + " vs " +
              std::to_string(rep_plain.iterations) + " iters; ";
  }
  return ok;
}

// C7: the always-runnable property suites.
bool criterion7(std::string& detail) {
  bool ok = true;
  std::string failures;
  std::mt19937_64 rng(kBaseSeed);

  // box-sum projection vs QP oracle, 1000 instances, 1e-8
  for (int trial = 0; trial < 1000 && ok; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 6);
    const VectorXd u = testsupport::random_vector(n, rng, 0.5);
    double p = static_cast<double>(rng() % 1000) / 1000.0;
    double q = static_cast<double>(rng() % 1000) / 1000.0;
    if (p > q) std::swap(p, q);
    if ((project_box_sum(u, p, q) - testsupport::qp_project_box_sum(u, p, q)).norm() > 1e-8) {
      ok = false;
      failures += "box-sum oracle mismatch; ";
    }
  }

  // top-k support optimality vs exhaustive enumeration, 200 instances, l <= 8
  for (int trial = 0; trial < 200 && ok; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const int k = 1 + static_cast<int>(rng() % n);
    double p = static_cast<double>(rng() % 500) / 1000.0;
    const double q = std::min(1.0, p + static_cast<double>(rng() % 500) / 1000.0);
    const VectorXd y = testsupport::random_vector(n, rng, 0.6);
    GroupSpec g;
    g.name = "t";
    g.indices.resize(static_cast<std::size_t>(n));
    std::iota(g.indices.begin(), g.indices.end(), 0);
    g.max_assets = k;
    g.budget_min = p;
    g.budget_max = q;
    double best = 0.0;
    testsupport::qp_project_group_bruteforce(y, k, p, q, &best);
    if ((y - project_group(y, g)).squaredNorm() > best + 1e-9) {
      ok = false;
      failures += "group support suboptimal; ";
    }
  }

  // gradient finite-difference checks, 50 instances per objective, rel 1e-5
  for (int trial = 0; trial < 50 && ok; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 27);  // up to 30
    const int samples = 10 + static_cast<int>(rng() % 41);  // up to 50
    Moments m;
    m.sigma = testsupport::random_psd(n, rng, 0.01);
    m.mu = testsupport::random_vector(n, rng, 0.01);
    const VectorXd w = testsupport::random_vector(n, rng, 0.3);
    const VectorXd v = testsupport::random_vector(n, rng, 0.3);
    const MarkowitzParams mk{0.2, 0.01};
    const double nu = 1.5;
    const auto mk_value = [&](const VectorXd& x) {
      return markowitz_value(x, m, mk) + 0.5 * nu * (x - v).squaredNorm();
    };
    const VectorXd g_mk = markowitz_grad(w, v, m, mk, nu);
    const VectorXd fd_mk = testsupport::finite_diff(mk_value, w);
    if ((g_mk - fd_mk).norm() > 1e-5 * std::max(1.0, fd_mk.norm())) {
      ok = false;
      failures += "markowitz gradient fd mismatch; ";
    }

    MatrixXd r(samples, n);
    for (int a = 0; a < samples; ++a)
      for (int b = 0; b < n; ++b) r(a, b) = testsupport::random_vector(1, rng, 0.03)[0];
    const VectorXd u = testsupport::random_vector(samples, rng, 0.2);
    const CvarParams cv{0.9, 2.0};
    const auto smooth_w = [&](const VectorXd& x) { return cvar_smooth_value(x, u, v, r, cv, nu); };
    const auto smooth_u = [&](const VectorXd& x) { return cvar_smooth_value(w, x, v, r, cv, nu); };
    const VectorXd g_w = cvar_grad_w(w, u, v, r, cv, nu);
    const VectorXd g_u = cvar_grad_u(w, u, r, cv);
    const VectorXd fd_w = testsupport::finite_diff(smooth_w, w);
    const VectorXd fd_u = testsupport::finite_diff(smooth_u, u);
    if ((g_w - fd_w).norm() > 1e-5 * std::max(1.0, fd_w.norm()) ||
        (g_u - fd_u).norm() > 1e-5 * std::max(1.0, fd_u.norm())) {
      ok = false;
      failures += "cvar gradient fd mismatch; ";
    }
  }

  // PALM descent monotonicity at 1e-10, single stage, unaccelerated
  {
    SolverConfig mono;
    mono.accelerate = false;
    mono.restarts = 0;
    mono.nu_schedule = {0.05};
    mono.max_iters = 1500;
    for (const Model model : {Model::kMarkowitz, Model::kCvar}) {
      const ProblemSpec prob = instance_10choose5(3, model);
      const SolveReport rep = model == Model::kMarkowitz ? palm_markowitz(prob, mono) : palm_cvar(prob, mono);
      for (std::size_t i = 1; i < rep.objective_trace.size(); ++i)
        if (rep.objective_trace[i] > rep.objective_trace[i - 1] + 1e-10) {
          ok = false;
          failures += "descent violation; ";
        }
    }
  }

  // feasibility of every reported portfolio (grouped instances)
  for (int trial = 0; trial < 5 && ok; ++trial) {
    const ReturnsPanel panel = synth_returns(20, 120, even_sector_sizes(20, 4), kBaseSeed + 40 + trial);
    GroupPartition part = sector_partition(panel, 2);
    part.groups[0].budget_min = 0.1;
    part.groups[1].budget_max = 0.6;
    part.validate();
    for (const Model model : {Model::kMarkowitz, Model::kCvar}) {
      const ProblemSpec prob =
          make_problem(panel, part, model, MarkowitzParams{0.1, 0.0}, CvarParams{0.9, 20.0});
      SolverConfig cfg;
      cfg.seed = static_cast<std::uint64_t>(trial);
      const SolveReport rep = solve(prob, cfg);
      const auto feas = check_feasible(rep.portfolio, part, 1e-10);
      if (!feas.ok) {
        ok = false;
        failures += "infeasible portfolio (" + std::string(model_name(model)) + "); ";
      }
    }
  }

  // alpha* first-order optimality, derivative <= 1e-10
  for (int trial = 0; trial < 100 && ok; ++trial) {
    const int n = 3, samples = 8;
    MatrixXd r(samples, n);
    for (int a = 0; a < samples; ++a)
      for (int b = 0; b < n; ++b) r(a, b) = testsupport::random_vector(1, rng, 0.05)[0];
    const VectorXd w = testsupport::random_vector(n, rng, 0.4);
    const VectorXd u = testsupport::random_vector(samples, rng, 0.3);
    const double rho = 0.5 + static_cast<double>(rng() % 100) / 20.0;
    const double astar = alpha_star(w, u, r, rho);
    const double derivative = 1.0 + rho * (r * w + VectorXd::Constant(samples, astar) + u).sum();
    if (std::abs(derivative) > 1e-10) {
      ok = false;
      failures += "alpha* derivative " + std::to_string(derivative) + "; ";
    }
  }

  // hinge prox vs the scalar grid oracle at resolution 1e-4
  for (int trial = 0; trial < 200 && ok; ++trial) {
    const double x = testsupport::random_vector(1, rng, 1.0)[0];
    const double t = 0.05 + static_cast<double>(rng() % 100) / 100.0;
    const double beta = 0.5 + static_cast<double>(rng() % 45) / 100.0;
    const int samples = 1 + static_cast<int>(rng() % 10);
    const double tau = t / (samples * (1.0 - beta));
    const double z = hinge_prox(VectorXd::Constant(1, x), t, beta, samples)[0];
    if (std::abs(z - testsupport::prox_grid_scalar(x, tau)) > 1e-4) {
      ok = false;
      failures += "hinge prox grid mismatch; ";
    }
  }

  detail = ok ? "box-sum oracle x1000, support optimality x200, gradient fd x50, descent, feasibility, "
                "alpha*, hinge prox all hold"
              : failures;
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::pair<int, std::pair<std::string, std::function<bool(std::string&)>>>> criteria{
      {1, {"markowitz matches the exhaustive global optimum (18/20 @ rel 1e-6)", criterion1}},
      {2, {"cvar lands in the bottom 2% of subset values (16/20 @ beta 0.9)", criterion2}},
      {3, {"solver beats randomized search on 10-from-30 timing", criterion3}},
      {4, {"escape table: k=1 column zero, fractions nondecreasing in k", criterion4}},
      {5, {"frontier dominance within 1e-8 at every grid point", criterion5}},
      {6, {"FISTA reaches the plain objective in strictly fewer iterations", criterion6}},
      {7, {"property suites (projections, gradients, descent, feasibility, prox)", criterion7}},
  };

  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));

  int failures = 0;
  for (auto& [id, entry] : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), id) == selected.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    std::string detail;
    bool passed = false;
    try {
      passed = entry.second(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::cout << (passed ? "[PASS]" : "[FAIL]") << " C" << id << ": " << entry.first << " - " << detail
              << " [" << secs << "s]" << std::endl;
    if (!passed) ++failures;
  }
  return failures;
}
