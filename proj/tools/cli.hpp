// Command-line front end: wires JSON configs and CSV I/O to the library.
// Subcommands: synth, estimate, solve, frontier, oracle, escape.
// Exit codes: 0 success, 1 validation error, 2 runtime failure.

#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "cardport/experiments.hpp"
#include "cardport/io.hpp"
#include "cardport/oracle.hpp"
#include "cardport/solver.hpp"

namespace cardport::cli {

using nlohmann::json;

struct DataSpec {
  std::optional<std::string> prices_path;
  struct Synth {
    int n_assets = 65;
    int n_samples = 251;
    int sectors = 7;
    std::uint64_t seed = 20180621u;
    SynthConfig params;
  };
  std::optional<Synth> synthetic;
};

struct RunConfig {
  DataSpec data;
  std::optional<std::string> partition_path;
  Model model = Model::kMarkowitz;
  MarkowitzParams markowitz{0.1, 0.0};
  CvarParams cvar{0.9, 20.0};
  SolverConfig solver;
  std::string output_dir = "out";
  json raw;  // for hashing
};

inline std::uint64_t config_hash(const RunConfig& cfg) { return fnv1a64(cfg.raw.dump()); }

inline DataSpec parse_data(const json& j) {
  DataSpec data;
  if (j.contains("prices") == j.contains("synthetic"))
    throw std::invalid_argument("config: data must name exactly one of 'prices' or 'synthetic'");
  if (j.contains("prices")) {
    data.prices_path = j.at("prices").get<std::string>();
    if (!std::filesystem::exists(*data.prices_path))
      throw std::invalid_argument("config: prices file does not exist: " + *data.prices_path);
  } else {
    DataSpec::Synth s;
    const json& sj = j.at("synthetic");
    s.n_assets = sj.value("n_assets", s.n_assets);
    s.n_samples = sj.value("n_samples", s.n_samples);
    s.sectors = sj.value("sectors", s.sectors);
    s.seed = sj.value("seed", s.seed);
    s.params.factor_vol = sj.value("factor_vol", s.params.factor_vol);
    s.params.idio_vol = sj.value("idio_vol", s.params.idio_vol);
    s.params.mean_low = sj.value("mean_low", s.params.mean_low);
    s.params.mean_high = sj.value("mean_high", s.params.mean_high);
    data.synthetic = s;
  }
  return data;
}

inline ReturnsPanel load_panel(const DataSpec& data) {
  if (data.prices_path) return to_returns(load_prices(std::filesystem::path(*data.prices_path)));
  const auto& s = *data.synthetic;
  return synth_returns(s.n_assets, s.n_samples, even_sector_sizes(s.n_assets, s.sectors), s.seed, s.params);
}

/// Partition file: JSON array of {name, tickers: [...], p, q, k}; tickers are
/// resolved against the panel.
inline GroupPartition parse_partition(const json& spec, const ReturnsPanel& panel) {
  if (!spec.is_array()) throw std::invalid_argument("partition: expected a JSON array of groups");
  GroupPartition part;
  part.n_assets = panel.n_assets();
  for (const auto& gj : spec) {
    GroupSpec g;
    g.name = gj.at("name").get<std::string>();
    for (const auto& t : gj.at("tickers")) {
      const std::string ticker = t.get<std::string>();
      const auto it = std::find(panel.tickers.begin(), panel.tickers.end(), ticker);
      if (it == panel.tickers.end())
        throw std::invalid_argument("partition: unknown ticker '" + ticker + "' in group '" + g.name + "'");
      g.indices.push_back(static_cast<int>(it - panel.tickers.begin()));
    }
    std::sort(g.indices.begin(), g.indices.end());
    g.budget_min = gj.value("p", 0.0);
    g.budget_max = gj.value("q", 1.0);
    g.max_assets = gj.value("k", static_cast<int>(g.indices.size()));
    part.groups.push_back(std::move(g));
  }
  part.validate();
  return part;
}

inline SolverConfig parse_solver(const json& j) {
  SolverConfig cfg;
  if (j.contains("nu_schedule")) cfg.nu_schedule = j.at("nu_schedule").get<std::vector<double>>();
  cfg.max_iters = j.value("max_iters", cfg.max_iters);
  cfg.tol = j.value("tol", cfg.tol);
  cfg.accelerate = j.value("accelerate", cfg.accelerate);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.restarts = j.value("restarts", cfg.restarts);
  const std::string mode = j.value("step_mode", std::string("lipschitz"));
  if (mode == "lipschitz") {
    cfg.step_mode = StepMode::kInverseLipschitz;
  } else if (mode == "fixed") {
    cfg.step_mode = StepMode::kFixed;
    cfg.fixed_step = j.value("fixed_step", 0.0);
  } else {
    throw std::invalid_argument("solver config: step_mode must be 'lipschitz' or 'fixed'");
  }
  const std::string form = j.value("fista_form", std::string("standard"));
  if (form == "standard")
    cfg.fista_form = FistaForm::kStandard;
  else if (form == "reflected")
    cfg.fista_form = FistaForm::kReflected;
  else
    throw std::invalid_argument("solver config: fista_form must be 'standard' or 'reflected'");
  cfg.relax_gap_tol = j.value("relax_gap_tol", cfg.relax_gap_tol);
  cfg.validate();
  return cfg;
}

inline RunConfig parse_run_config(const std::filesystem::path& path) {
  RunConfig cfg;
  cfg.raw = json::parse(read_text_file(path));
  cfg.data = parse_data(cfg.raw.at("data"));
  if (cfg.raw.contains("partition")) cfg.partition_path = cfg.raw.at("partition").get<std::string>();
  if (cfg.raw.contains("objective")) {
    const json& obj = cfg.raw.at("objective");
    const std::string model = obj.value("model", std::string("markowitz"));
    if (model == "markowitz")
      cfg.model = Model::kMarkowitz;
    else if (model == "cvar")
      cfg.model = Model::kCvar;
    else
      throw std::invalid_argument("config: objective.model must be 'markowitz' or 'cvar'");
    cfg.markowitz.gamma_return = obj.value("gamma_return", cfg.markowitz.gamma_return);
    cfg.markowitz.lambda_ridge = obj.value("lambda_ridge", cfg.markowitz.lambda_ridge);
    cfg.cvar.beta = obj.value("beta", cfg.cvar.beta);
    cfg.cvar.rho_relax = obj.value("rho_relax", cfg.cvar.rho_relax);
  }
  if (cfg.raw.contains("solver")) cfg.solver = parse_solver(cfg.raw.at("solver"));
  cfg.output_dir = cfg.raw.value("output_dir", cfg.output_dir);
  return cfg;
}

inline GroupPartition resolve_partition(const RunConfig& cfg, const ReturnsPanel& panel) {
  if (!cfg.partition_path) return GroupPartition::single_group(panel.n_assets(), panel.n_assets());
  return parse_partition(json::parse(read_text_file(*cfg.partition_path)), panel);
}

inline json report_to_json(const SolveReport& rep, const ProblemSpec& prob, std::uint64_t hash,
                           std::uint64_t seed) {
  json weights = json::object();
  json support = json::array();
  for (int i = 0; i < prob.n_assets(); ++i) {
    weights[prob.panel.tickers[static_cast<std::size_t>(i)]] = rep.portfolio[i];
    if (rep.portfolio[i] != 0.0) support.push_back(prob.panel.tickers[static_cast<std::size_t>(i)]);
  }
  json j{{"model", model_name(prob.model)},
         {"objective_value", rep.portfolio_value},
         {"relax_gap", rep.relax_gap},
         {"stage_gaps", rep.stage_gaps},
         {"iterations", rep.iterations},
         {"converged", rep.converged},
         {"stationarity_residual", rep.stationarity_residual},
         {"wall_time_seconds", rep.wall_time},
         {"weights", weights},
         {"support", support},
         {"objective_trace", rep.objective_trace},
         {"config_hash", hex64(hash)},
         {"seed", seed}};
  if (rep.portfolio_alpha) {
    j["alpha"] = *rep.portfolio_alpha;
    j["phi"] = rep.portfolio_value;
  }
  return j;
}

inline std::string weights_csv(const SolveReport& rep, const ReturnsPanel& panel) {
  std::string header, row;
  for (int i = 0; i < panel.n_assets(); ++i) {
    if (i) {
      header += ',';
      row += ',';
    }
    header += panel.tickers[static_cast<std::size_t>(i)];
    row += format_double(rep.portfolio[i]);
  }
  return header + "\n" + row + "\n";
}

inline std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> grid;
  for (const auto& cell : split_csv_line(csv)) {
    double v = 0.0;
    if (!parse_double(cell, v)) throw std::invalid_argument("grid: '" + cell + "' is not a number");
    grid.push_back(v);
  }
  return grid;
}

inline std::vector<int> parse_int_list(const std::string& csv) {
  std::vector<int> out;
  for (const double v : parse_grid(csv)) out.push_back(static_cast<int>(v));
  return out;
}

// ---- subcommand bodies ------------------------------------------------------

inline int cmd_synth(int n, int samples, int sectors, std::uint64_t seed, const std::string& out_dir) {
  const ReturnsPanel panel = synth_returns(n, samples, even_sector_sizes(n, sectors), seed);
  const std::filesystem::path dir(out_dir);
  write_text_file(dir / "returns.csv", returns_to_csv(panel));
  // partition template: one full-cardinality group per sector
  json groups = json::array();
  const GroupPartition part = sector_partition(panel, n);  // k capped at group size
  for (const auto& g : part.groups) {
    json tickers = json::array();
    for (const int i : g.indices) tickers.push_back(panel.tickers[static_cast<std::size_t>(i)]);
    groups.push_back({{"name", g.name}, {"tickers", tickers}, {"p", 0.0}, {"q", 1.0}, {"k", g.max_assets}});
  }
  write_text_file(dir / "partition.json", groups.dump(2) + "\n");
  std::cout << "synth ok: n=" << n << " samples=" << samples << " sectors=" << sectors << " seed=" << seed
            << " -> " << (dir / "returns.csv").string() << ", " << (dir / "partition.json").string() << "\n";
  return 0;
}

inline int cmd_estimate(const RunConfig& cfg) {
  const ReturnsPanel panel = load_panel(cfg.data);
  const Moments m = estimate_moments(panel);
  const std::filesystem::path dir(cfg.output_dir);
  write_text_file(dir / "returns.csv", returns_to_csv(panel));
  std::string mu_csv, header;
  for (int i = 0; i < panel.n_assets(); ++i) {
    if (i) {
      header += ',';
      mu_csv += ',';
    }
    header += panel.tickers[static_cast<std::size_t>(i)];
    mu_csv += format_double(m.mu[i]);
  }
  write_text_file(dir / "mu.csv", header + "\n" + mu_csv + "\n");
  std::string sigma_csv = header + "\n";
  for (int r = 0; r < panel.n_assets(); ++r) {
    for (int c = 0; c < panel.n_assets(); ++c) {
      if (c) sigma_csv += ',';
      sigma_csv += format_double(m.sigma(r, c));
    }
    sigma_csv += '\n';
  }
  write_text_file(dir / "sigma.csv", sigma_csv);
  std::cout << "estimate ok: n=" << panel.n_assets() << " samples=" << panel.n_samples() << " -> "
            << (dir / "mu.csv").string() << ", " << (dir / "sigma.csv").string() << "\n";
  return 0;
}

inline int cmd_solve(const RunConfig& cfg) {
  const ReturnsPanel panel = load_panel(cfg.data);
  const GroupPartition part = resolve_partition(cfg, panel);
  const ProblemSpec prob = make_problem(panel, part, cfg.model, cfg.markowitz, cfg.cvar);
  const SolveReport rep = solve(prob, cfg.solver);
  const std::uint64_t hash = config_hash(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  write_text_file(dir / "weights.csv", weights_csv(rep, panel));
  write_text_file(dir / "report.json", report_to_json(rep, prob, hash, cfg.solver.seed).dump(2) + "\n");
  std::cout << "solve ok: model=" << model_name(cfg.model) << " objective=" << rep.portfolio_value
            << " gap=" << rep.relax_gap << " iters=" << rep.iterations << " time=" << rep.wall_time << "s -> "
            << (dir / "report.json").string() << "\n";
  return 0;
}

inline int cmd_frontier(const RunConfig& cfg, const std::string& grid_csv, int k_per_sector,
                        const std::string& exclude_a, const std::string& exclude_b) {
  const ReturnsPanel panel = load_panel(cfg.data);
  if (panel.sectors.empty())
    throw std::invalid_argument("frontier: the data source has no sector labels (use synthetic data)");
  std::vector<std::string> sector_names;
  for (const auto& s : panel.sectors)
    if (std::find(sector_names.begin(), sector_names.end(), s) == sector_names.end()) sector_names.push_back(s);

  const auto split_names = [](const std::string& csv) {
    std::vector<std::string> out;
    if (!csv.empty())
      for (const auto& cell : split_csv_line(csv)) out.push_back(trim(cell));
    return out;
  };
  std::vector<std::string> ex_a = split_names(exclude_a);
  std::vector<std::string> ex_b = split_names(exclude_b);
  if (ex_a.empty()) ex_a = {sector_names[sector_names.size() > 4 ? 4 : sector_names.size() - 1]};
  if (ex_b.empty()) {
    ex_b = ex_a;
    ex_b.push_back(sector_names[sector_names.size() > 5 ? 5 : 0]);
  }

  std::vector<FrontierVariant> variants;
  variants.push_back({"unconstrained", sector_partition(panel, panel.n_assets())});
  variants.push_back({"ex1-k" + std::to_string(k_per_sector), sector_partition(panel, k_per_sector, ex_a)});
  variants.push_back({"ex2-k" + std::to_string(k_per_sector), sector_partition(panel, k_per_sector, ex_b)});

  std::vector<double> grid;
  if (!grid_csv.empty()) {
    grid = parse_grid(grid_csv);
  } else if (cfg.model == Model::kMarkowitz) {
    for (int i = 0; i < 31; ++i) grid.push_back(1.5 * i / 30.0);
  } else {
    for (int i = 0; i < 10; ++i) grid.push_back(0.5 + 0.05 * i);
  }

  const auto curves = cfg.model == Model::kMarkowitz
                          ? frontier_markowitz(panel, variants, grid, cfg.markowitz.lambda_ridge, cfg.solver)
                          : frontier_cvar(panel, variants, grid, cfg.cvar.rho_relax, cfg.solver);
  const std::filesystem::path dir(cfg.output_dir);
  write_text_file(dir / "frontier.csv",
                  frontier_to_csv(curves, panel.n_assets(), config_hash(cfg), cfg.solver.seed));
  std::size_t points = 0, failures = 0;
  for (const auto& c : curves) {
    points += c.points.size();
    failures += c.errors.size();
    for (const auto& err : c.errors) std::cerr << "frontier point failed (" << c.label << "): " << err << "\n";
  }
  std::cout << "frontier ok: model=" << model_name(cfg.model) << " curves=" << curves.size()
            << " points=" << points << " failures=" << failures << " -> " << (dir / "frontier.csv").string()
            << "\n";
  return 0;
}

inline int cmd_oracle(const RunConfig& cfg, int k, std::uint64_t cap, bool timing, int trials,
                      double cap_seconds) {
  const ReturnsPanel panel = load_panel(cfg.data);
  const ProblemSpec prob = make_problem(panel, GroupPartition::single_group(panel.n_assets(), k), cfg.model,
                                        cfg.markowitz, cfg.cvar);
  const std::uint64_t hash = config_hash(cfg);
  const std::filesystem::path dir(cfg.output_dir);
  if (timing) {
    const auto rows = timing_comparison(prob, k, trials, cfg.solver, cap_seconds, cfg.solver.seed);
    write_text_file(dir / "timing.csv", timing_to_csv(rows, hash, cfg.solver.seed));
    double solver_mean = 0.0, search_mean = 0.0;
    for (const auto& row : rows) (row.method == "solver" ? solver_mean : search_mean) += row.elapsed_seconds;
    solver_mean /= trials;
    search_mean /= trials;
    std::cout << "oracle timing ok: trials=" << trials << " solver_mean=" << solver_mean
              << "s search_mean=" << search_mean << "s -> " << (dir / "timing.csv").string() << "\n";
    return 0;
  }
  const ComparisonResult res = brute_force_comparison(prob, k, cfg.solver, cap);
  write_text_file(dir / "histogram.csv", histogram_to_csv(res.all_values, hash, cfg.solver.seed));
  json marker{{"model", model_name(cfg.model)},      {"n", res.n_assets},
              {"k", res.cardinality},                {"solver_value", res.solver_value},
              {"best_value", res.best_value},        {"quantile_rank", res.quantile_rank},
              {"config_hash", hex64(hash)},          {"seed", cfg.solver.seed}};
  write_text_file(dir / "marker.json", marker.dump(2) + "\n");
  std::cout << "oracle ok: subsets=" << res.all_values.size() << " best=" << res.best_value
            << " solver=" << res.solver_value << " rank=" << res.quantile_rank << " -> "
            << (dir / "histogram.csv").string() << "\n";
  return 0;
}

inline int cmd_escape(const RunConfig& cfg, const std::string& model_name_str, const std::string& n_csv,
                      const std::string& k_csv, int trials, std::uint64_t seed) {
  const ReturnsPanel universe = load_panel(cfg.data);
  const Model model = model_name_str == "cvar" ? Model::kCvar : Model::kMarkowitz;
  if (model_name_str != "cvar" && model_name_str != "markowitz")
    throw std::invalid_argument("escape: --model must be markowitz or cvar");
  const auto table = escape_experiment(universe, parse_int_list(n_csv), parse_int_list(k_csv), trials, model,
                                       seed, cfg.solver, cfg.markowitz, cfg.cvar);
  const std::filesystem::path dir(cfg.output_dir);
  write_text_file(dir / "escape.csv", escape_to_csv(table, config_hash(cfg), seed));
  std::cout << "escape ok: model=" << model_name_str << " cells=" << table.size() << " trials=" << trials
            << " -> " << (dir / "escape.csv").string() << "\n";
  return 0;
}

// ---- entry point -------------------------------------------------------------

inline int run(const std::vector<std::string>& args) {
  CLI::App app{"cardinality-constrained portfolio solver"};
  app.require_subcommand(1);

  std::string config_path, out_dir, grid_csv, exclude_a, exclude_b, model_override, n_csv = "15",
                                                                                    k_csv = "1,2,3,4";
  int synth_n = 65, synth_samples = 251, synth_sectors = 7;
  std::uint64_t seed = 20180621u;
  bool have_seed_flag = false;
  double gamma = -1.0, beta = -1.0, rho = -1.0, lambda = -1.0, cap_seconds = 5.0;
  int k = 5, trials = 20;
  std::uint64_t cap = 2'000'000;
  bool timing = false;
  std::optional<bool> accel_override;

  auto* synth = app.add_subcommand("synth", "generate a seeded synthetic returns panel");
  synth->add_option("--n", synth_n, "asset count");
  synth->add_option("--samples", synth_samples, "sample count");
  synth->add_option("--sectors", synth_sectors, "sector count");
  synth->add_option("--seed", seed, "generator seed");
  synth->add_option("--out", out_dir, "output directory")->required();

  const auto add_common = [&](CLI::App* cmd, bool config_required = true) {
    auto* opt = cmd->add_option("--config", config_path, "run configuration (JSON)");
    if (config_required) opt->required();
    cmd->add_option("--out", out_dir, "output directory (overrides config)");
    cmd->add_option("--gamma", gamma, "markowitz return weight override");
    cmd->add_option("--lambda", lambda, "markowitz ridge override");
    cmd->add_option("--beta", beta, "cvar quantile override");
    cmd->add_option("--rho", rho, "cvar coupling weight override");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { seed = s; have_seed_flag = true; }, "solver seed override");
    cmd->add_option("--model", model_override, "objective model override (markowitz|cvar)");
    cmd->add_flag_callback("--accelerate", [&] { accel_override = true; }, "force FISTA on");
    cmd->add_flag_callback("--no-accelerate", [&] { accel_override = false; }, "force FISTA off");
  };

  auto* estimate = app.add_subcommand("estimate", "estimate moments from the data source");
  add_common(estimate);
  auto* solve_cmd = app.add_subcommand("solve", "run one cardinality-constrained solve");
  add_common(solve_cmd);
  auto* frontier = app.add_subcommand("frontier", "sweep the efficient frontier");
  add_common(frontier);
  frontier->add_option("--grid", grid_csv, "comma-separated parameter grid");
  int k_per_sector = 2;
  frontier->add_option("--k-per-sector", k_per_sector, "cardinality cap per sector");
  frontier->add_option("--exclude", exclude_a, "sectors excluded in the first constrained variant");
  frontier->add_option("--exclude2", exclude_b, "sectors excluded in the second constrained variant");
  auto* oracle_cmd = app.add_subcommand("oracle", "exhaustive subset search / timing benchmark");
  add_common(oracle_cmd);
  oracle_cmd->add_option("--k", k, "global cardinality");
  oracle_cmd->add_option("--cap", cap, "maximum subset count");
  oracle_cmd->add_flag("--timing", timing, "run the randomized-search timing comparison");
  oracle_cmd->add_option("--trials", trials, "timing trials");
  oracle_cmd->add_option("--cap-seconds", cap_seconds, "per-trial search time cap");
  auto* escape = app.add_subcommand("escape", "stationary-point escape experiment");
  add_common(escape);
  escape->add_option("--n", n_csv, "comma-separated asset counts");
  escape->add_option("--k", k_csv, "comma-separated cardinalities");
  escape->add_option("--trials", trials, "trials per cell");

  try {
    std::vector<std::string> argv_rev(args.rbegin(), args.rend());
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return 0;
    }
    std::cerr << app.help() << "\nerror: " << e.what() << "\n";
    return 1;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_n, synth_samples, synth_sectors, seed, out_dir);

    RunConfig cfg = parse_run_config(config_path);
    if (!out_dir.empty()) cfg.output_dir = out_dir;
    if (gamma >= 0.0) cfg.markowitz.gamma_return = gamma;
    if (lambda >= 0.0) cfg.markowitz.lambda_ridge = lambda;
    if (beta >= 0.0) cfg.cvar.beta = beta;
    if (rho >= 0.0) cfg.cvar.rho_relax = rho;
    if (have_seed_flag) cfg.solver.seed = seed;
    if (accel_override) cfg.solver.accelerate = *accel_override;
    if (!model_override.empty()) {
      if (model_override == "markowitz")
        cfg.model = Model::kMarkowitz;
      else if (model_override == "cvar")
        cfg.model = Model::kCvar;
      else
        throw std::invalid_argument("--model must be markowitz or cvar");
    }
    // overrides participate in the config hash so artifacts are traceable
    cfg.raw["overrides"] = {{"gamma", gamma},  {"lambda", lambda},       {"beta", beta},
                            {"rho", rho},      {"seed", cfg.solver.seed}, {"model", model_override},
                            {"out", out_dir}};

    if (estimate->parsed()) return cmd_estimate(cfg);
    if (solve_cmd->parsed()) return cmd_solve(cfg);
    if (frontier->parsed()) return cmd_frontier(cfg, grid_csv, k_per_sector, exclude_a, exclude_b);
    if (oracle_cmd->parsed()) return cmd_oracle(cfg, k, cap, timing, trials, cap_seconds);
    if (escape->parsed()) return cmd_escape(cfg, model_override.empty() ? "markowitz" : model_override, n_csv,
                                            k_csv, trials, cfg.solver.seed);
    std::cerr << app.help();
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace cardport::cli
