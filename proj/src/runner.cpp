#include "stochact/runner.hpp"

#include "artifacts.hpp"
#include "stochact/actuator_game.hpp"
#include "stochact/error.hpp"
#include "stochact/levelset_rounding.hpp"

#include <chrono>
#include <cmath>

namespace stochact {

using nlohmann::json;
using detail::CsvTable;
using detail::join_path;

namespace {

class PhaseTimer {
 public:
  explicit PhaseTimer(RunReport& report) : report_(report), start_(Clock::now()) {}
  void lap(const std::string& phase) {
    const auto now = Clock::now();
    report_.wall_times[phase] = std::chrono::duration<double>(now - start_).count();
    start_ = now;
  }

 private:
  using Clock = std::chrono::steady_clock;
  RunReport& report_;
  Clock::time_point start_;
};

RunReport base_report(const ExperimentConfig& config, const std::string& command) {
  RunReport r;
  r.command = command;
  r.seed = config.solver.seed;
  r.config_echo = config.echo;
  return r;
}

void add_problem_scalars(RunReport& r, const ControlProblem& p) {
  r.scalars["dt"] = p.tree.dt();
  r.scalars["h"] = p.grid.h();
  r.scalars["epsilon"] = p.epsilon;
  r.scalars["leaves"] = static_cast<double>(p.tree.leaves());
  r.scalars["y0_norm"] = norm(p.grid, p.y0);
}

std::vector<double> flatten(const LevelField& values) {
  return std::vector<double>(values.data(), values.data() + values.size());
}

std::vector<double> to_vector(const Field& f) { return std::vector<double>(f.data(), f.data() + f.size()); }

std::vector<double> control_norms(const ControlProblem& p, const AdaptedField& u) {
  std::vector<double> norms;
  for (int k = 0; k < u.level_count(); ++k) {
    norms.push_back(std::sqrt(expected_sq_norm(p.tree, p.grid, k, u.levels[k])));
  }
  return norms;
}

void write_control_norms(const std::string& dir, const ControlProblem& p,
                         const std::vector<double>& norms) {
  CsvTable table({"k", "t_k", "norm"});
  for (std::size_t k = 0; k < norms.size(); ++k) {
    table.add({static_cast<double>(k), p.tree.time(static_cast<int>(k)), norms[k]});
  }
  write_file_atomic(join_path(dir, "control_norms.csv"), table.str());
}

void write_terminal_table(const std::string& path, const ControlProblem& p,
                          const TerminalField& field) {
  CsvTable table({"leaf", "node", "x", "probability", "value"});
  const double prob = p.tree.probability(p.tree.steps());
  for (Eigen::Index leaf = 0; leaf < field.values.cols(); ++leaf) {
    for (int i = 0; i < p.grid.n(); ++i) {
      table.add({static_cast<double>(leaf), static_cast<double>(i), p.grid.node(i), prob,
                 field.values(i, leaf)});
    }
  }
  write_file_atomic(path, table.str());
}

void write_grid_field(const std::string& path, const Grid& grid, const Field& f) {
  CsvTable table({"x", "value"});
  for (int i = 0; i < grid.n(); ++i) table.add({grid.node(i), f[i]});
  write_file_atomic(path, table.str());
}

struct ControlRun {
  ControlSolution solution;
  OptimalityReport optimality;
  double duality = 0.0;
};

ControlRun solve_and_check(const ControlProblem& problem, const SolverOptions& options) {
  ControlRun run;
  run.solution = minimize_J(problem, options);
  run.optimality = verify_optimality(problem, run.solution);
  run.duality = duality_residual(problem.grid, problem.tree, problem.prop, problem.noise,
                                 problem.beta, problem.y0, run.solution.u_star,
                                 run.solution.eta_star);
  return run;
}

void add_control_scalars(RunReport& r, const ControlRun& run) {
  const ControlSolution& s = run.solution;
  r.scalars["N_value"] = s.N_value;
  r.scalars["N_from_J"] = -2.0 * s.J_value;
  r.scalars["J_value"] = s.J_value;
  r.scalars["J_quadratic"] = s.J_parts.quadratic;
  r.scalars["J_penalty"] = s.J_parts.penalty;
  r.scalars["J_linear"] = s.J_parts.linear;
  r.scalars["eta_norm"] = s.eta_norm;
  r.scalars["free_terminal_norm"] = s.free_terminal_norm;
  r.scalars["iterations"] = s.iterations;
  r.scalars["lipschitz"] = s.lipschitz;
  r.scalars["constraint_slack"] = run.optimality.constraint_slack;
  r.scalars["kkt_residual"] = run.optimality.kkt;
  r.scalars["identity_residual"] = run.optimality.identity;
  r.scalars["value_identity_residual"] = run.optimality.value_identity;
  r.scalars["bound_ratio"] = run.optimality.bound_ratio;
  r.scalars["kkt_scale"] = run.optimality.kkt_scale;
  r.scalars["identity_scale"] = run.optimality.identity_scale;
  r.scalars["duality_residual"] = run.duality;
  r.status = std::string(to_string(s.status));
  if (run.optimality.advisory) r.notes["optimality"] = "advisory: solver did not converge";
}

GameSchedule make_schedule(const ExperimentConfig& config) {
  GameSchedule s;
  s.outer_iters = config.solver.outer_iters;
  s.step0 = config.solver.step0;
  s.gap_tol = config.solver.gap_tol;
  s.vertex_candidates = config.solver.vertex_candidates;
  s.tie_break = config.solver.tie_break;
  s.inner = make_solver_options(config);
  return s;
}

double mirror_deviation(const Field& f) {
  double dev = 0.0;
  const Eigen::Index n = f.size();
  for (Eigen::Index i = 0; i < n; ++i) dev = std::max(dev, std::abs(f[i] - f[n - 1 - i]));
  return dev;
}

void add_rounding_scalars(RunReport& r, const Grid& grid, const LevelSetResult& rounded,
                          const BangBangReport& bang, double alpha) {
  r.scalars["alpha"] = alpha;
  r.scalars["c_alpha"] = rounded.c_alpha;
  r.scalars["achieved_mass"] = rounded.achieved_mass;
  r.scalars["target_mass"] = alpha * grid.measure();
  r.scalars["fractional_cells"] = static_cast<double>(rounded.fractional_cells.size());
  r.scalars["tie_set_size"] = static_cast<double>(rounded.tie_set_cells.size());
  r.scalars["indicator_mirror_deviation"] = mirror_deviation(rounded.indicator.theta);
  r.scalars["bangbang_samples"] = bang.samples;
  r.scalars["bangbang_violations"] = bang.violations;
  r.scalars["bangbang_max_violation"] = bang.max_violation;
  r.scalars["bangbang_min_margin"] = bang.min_margin;
  r.scalars["bangbang_mean_margin"] = bang.mean_margin;
}

}  // namespace

RunReport run_solve_control(const ExperimentConfig& config, const std::string& directory) {
  RunReport r = base_report(config, "solve-control");
  PhaseTimer timer(r);
  const ControlProblem problem = make_problem(config);
  add_problem_scalars(r, problem);
  timer.lap("setup");
  const ControlRun run = solve_and_check(problem, make_solver_options(config));
  timer.lap("solve");
  add_control_scalars(r, run);
  const std::vector<double> norms = control_norms(problem, run.solution.u_star);
  r.fields["eta_star"] = flatten(run.solution.eta_star.values);
  r.fields["terminal_state"] = flatten(run.solution.terminal.values);
  r.fields["control_norms"] = norms;
  r.fields["beta"] = to_vector(problem.beta);

  if (!directory.empty()) {
    detail::ensure_directory(directory);
    if (config.output.has("csv")) {
      write_control_norms(directory, problem, norms);
      write_terminal_table(join_path(directory, "eta_star.csv"), problem, run.solution.eta_star);
      write_terminal_table(join_path(directory, "terminal_state.csv"), problem, run.solution.terminal);
    }
    if (config.output.has("bin")) {
      write_eta_binary(join_path(directory, "eta_star.bin"), run.solution.eta_star);
    }
    timer.lap("write");
    write_report(r, directory);
  }
  return r;
}

RunReport run_optimize_actuator(const ExperimentConfig& config, const std::string& directory) {
  RunReport r = base_report(config, "optimize-actuator");
  PhaseTimer timer(r);
  const ControlProblem problem = make_problem(config);
  const double alpha = config.control.alpha;
  add_problem_scalars(r, problem);
  timer.lap("setup");

  const EquilibriumReport eq = optimize_theta(problem, alpha, nullptr, make_schedule(config));
  timer.lap("game");

  const LevelSetResult rounded = round_to_indicator(problem.grid, eq.H, alpha,
                                                    config.solver.tie_break, config.solver.rounding);
  const ControlProblem rounded_problem = problem.with_beta(rounded.indicator.beta());
  SolverOptions inner = make_solver_options(config);
  inner.warm_start = eq.eta_star;
  const ControlRun rounded_run = solve_and_check(rounded_problem, inner);
  timer.lap("rounding");

  const std::vector<Field> extra{eq.theta_star.theta};
  const BangBangReport bang = verify_bang_bang(problem.grid, rounded, eq.H,
                                               config.solver.certificate_samples,
                                               config.solver.seed, extra);
  timer.lap("certificate");

  const double gap_total = eq.nash_gap_theta + eq.nash_gap_eta;
  r.scalars["N_relaxed"] = eq.N_value;
  r.scalars["N_rounded"] = rounded_run.solution.N_value;
  r.scalars["N_change"] = std::abs(rounded_run.solution.N_value - eq.N_value);
  r.scalars["N_value"] = rounded_run.solution.N_value;
  r.scalars["J_value"] = rounded_run.solution.J_value;
  r.scalars["f_value"] = eq.f_value;
  r.scalars["nash_gap_theta"] = eq.nash_gap_theta;
  r.scalars["nash_gap_eta"] = eq.nash_gap_eta;
  r.scalars["nash_gap_total"] = gap_total;
  r.scalars["gap_tolerance"] = config.solver.gap_tol * (1.0 + std::abs(eq.f_value));
  r.scalars["outer_iterations"] = eq.iterations;
  r.scalars["constraint_slack"] = rounded_run.optimality.constraint_slack;
  r.scalars["kkt_residual"] = rounded_run.optimality.kkt;
  r.scalars["duality_residual"] = rounded_run.duality;
  r.scalars["relaxed_kkt_residual"] = eq.solution.kkt_residual;
  r.scalars["H_mirror_deviation"] = mirror_deviation(eq.H) / std::max(1e-300, eq.H.cwiseAbs().maxCoeff());
  add_rounding_scalars(r, problem.grid, rounded, bang, alpha);

  if (!rounded_run.solution.converged) {
    r.status = std::string(to_string(rounded_run.solution.status));
  } else {
    r.status = eq.converged ? "converged" : "max-iterations";
  }

  r.fields["H"] = to_vector(eq.H);
  r.fields["theta_star"] = to_vector(eq.theta_star.theta);
  r.fields["indicator"] = to_vector(rounded.indicator.theta);
  const std::vector<double> norms = control_norms(problem, rounded_run.solution.u_star);
  r.fields["control_norms"] = norms;

  if (!directory.empty()) {
    detail::ensure_directory(directory);
    if (config.output.has("csv")) {
      write_grid_field(join_path(directory, "H.csv"), problem.grid, eq.H);
      write_grid_field(join_path(directory, "theta_star.csv"), problem.grid, eq.theta_star.theta);
      write_grid_field(join_path(directory, "indicator.csv"), problem.grid, rounded.indicator.theta);
      CsvTable conv({"iter", "objective", "gap", "step", "best_objective", "vertex"});
      for (const auto& e : eq.trace) {
        conv.add({static_cast<double>(e.iteration), e.N, e.gap, e.step, e.best_N, e.vertex ? 1.0 : 0.0});
      }
      write_file_atomic(join_path(directory, "convergence.csv"), conv.str());
      write_control_norms(directory, problem, norms);
    }
    if (config.output.has("bin")) {
      write_eta_binary(join_path(directory, "eta_star.bin"), eq.eta_star);
    }
    timer.lap("write");
    write_report(r, directory);
  }
  return r;
}

RunReport run_round_levelset(const ExperimentConfig& config, const std::string& directory) {
  RunReport r = base_report(config, "round-levelset");
  PhaseTimer timer(r);
  const ControlProblem problem = make_problem(config);
  const double alpha = config.control.alpha;
  add_problem_scalars(r, problem);

  Field H;
  if (config.h_file) {
    const detail::CsvData data = detail::read_csv(*config.h_file);
    const std::vector<double> values = data.column("value");
    if (static_cast<int>(values.size()) != problem.grid.n()) {
      throw DimensionError("round-levelset: H file has " + std::to_string(values.size()) +
                           " rows, grid has " + std::to_string(problem.grid.n()) + " nodes");
    }
    H = Eigen::Map<const Field>(values.data(), problem.grid.n());
    r.notes["H_source"] = *config.h_file;
  } else {
    const ControlRun before = solve_and_check(problem, make_solver_options(config));
    H = compute_H(problem, before.solution.eta_star);
    r.scalars["N_before"] = before.solution.N_value;
    r.notes["H_source"] = "computed at the configured actuator";
  }
  timer.lap("H");

  const LevelSetResult rounded =
      round_to_indicator(problem.grid, H, alpha, config.solver.tie_break, config.solver.rounding);
  const BangBangReport bang = verify_bang_bang(problem.grid, rounded, H,
                                               config.solver.certificate_samples,
                                               config.solver.seed);
  add_rounding_scalars(r, problem.grid, rounded, bang, alpha);
  timer.lap("rounding");

  if (!config.h_file) {
    const ControlRun after = solve_and_check(problem.with_beta(rounded.indicator.beta()),
                                             make_solver_options(config));
    r.scalars["N_after"] = after.solution.N_value;
    r.status = std::string(to_string(after.solution.status));
  }
  r.fields["H"] = to_vector(H);
  r.fields["indicator"] = to_vector(rounded.indicator.theta);

  if (!directory.empty()) {
    detail::ensure_directory(directory);
    if (config.output.has("csv")) {
      write_grid_field(join_path(directory, "H.csv"), problem.grid, H);
      write_grid_field(join_path(directory, "indicator.csv"), problem.grid, rounded.indicator.theta);
    }
    timer.lap("write");
    write_report(r, directory);
  }
  return r;
}

std::optional<double> observability_ratio(const ControlProblem& problem, const TerminalField& eta) {
  const SolveRecord rec =
      backward_solve(problem.grid, problem.tree, problem.prop, problem.noise, problem.beta, eta);
  const double observed = control_energy(problem.grid, problem.tree, rec.obs);
  if (!(observed > 0.0)) return std::nullopt;
  const Field z0 = rec.z0();
  return inner_product(problem.grid, z0, z0) / observed;
}

ObservabilityEstimate estimate_observability_constant(const ControlProblem& problem,
                                                      std::span<const TerminalField> samples) {
  ObservabilityEstimate est;
  for (const TerminalField& eta : samples) {
    const auto ratio = observability_ratio(problem, eta);
    if (!ratio) {
      ++est.excluded;
      continue;
    }
    est.estimate = std::max(est.estimate, *ratio);
    ++est.used;
  }
  return est;
}

ObservabilityEstimate estimate_observability_constant(const ControlProblem& problem, int trials,
                                                      std::uint64_t seed) {
  if (trials < 1) throw Error(ErrorCode::invalid_argument, "observability: trials must be >= 1");
  std::vector<TerminalField> samples;
  samples.reserve(static_cast<std::size_t>(trials));
  std::uint64_t state = seed;
  for (int t = 0; t < trials; ++t) {
    TerminalField eta = TerminalField::zeros(problem.tree, problem.grid.n());
    for (Eigen::Index j = 0; j < eta.values.cols(); ++j) {
      for (Eigen::Index i = 0; i < eta.values.rows(); ++i) {
        std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        z ^= z >> 31;
        eta.values(i, j) = -1.0 + 2.0 * static_cast<double>(z >> 11) * 0x1.0p-53;
      }
    }
    samples.push_back(std::move(eta));
  }
  return estimate_observability_constant(problem, samples);
}

RunReport run_estimate_obs(const ExperimentConfig& config, const std::string& directory) {
  RunReport r = base_report(config, "estimate-obs");
  PhaseTimer timer(r);
  const ControlProblem problem = make_problem(config);
  add_problem_scalars(r, problem);
  const ObservabilityEstimate est =
      estimate_observability_constant(problem, config.solver.obs_trials, config.solver.seed);
  timer.lap("estimate");
  r.scalars["observability_lower_bound"] = est.estimate;
  r.scalars["samples_used"] = est.used;
  r.scalars["samples_excluded"] = est.excluded;
  r.notes["observability"] = "max sampled ratio; a lower bound on the constant, diagnostic only";
  r.status = est.used > 0 ? "ok" : "no-usable-samples";
  if (!directory.empty()) write_report(r, directory);
  return r;
}

RunReport run_sweep(const ExperimentConfig& config, const std::string& directory) {
  RunReport r = base_report(config, "sweep");
  PhaseTimer timer(r);
  if (config.sweep.values.empty()) throw ConfigError("sweep.values: no sweep values given");
  CsvTable table({"value", "N_value", "J_value", "constraint_slack", "kkt_residual", "converged"});
  int failures = 0;
  for (double value : config.sweep.values) {
    json doc = config.echo;
    doc.erase("sweep");
    apply_overrides(doc, {config.sweep.key + "=" + detail::format_double(value)});
    const ConfigResult point = validate_config(doc);
    if (!point.ok()) {
      throw ConfigError("sweep value " + detail::format_double(value) + ": " + point.errors.front());
    }
    const RunReport sub = run_solve_control(*point.config, "");
    const bool converged = sub.status == "converged";
    if (!converged) ++failures;
    table.add({value, sub.scalars.at("N_value"), sub.scalars.at("J_value"),
               sub.scalars.at("constraint_slack"), sub.scalars.at("kkt_residual"),
               converged ? 1.0 : 0.0});
  }
  timer.lap("sweep");
  r.scalars["points"] = static_cast<double>(config.sweep.values.size());
  r.scalars["failures"] = failures;
  r.notes["sweep_key"] = config.sweep.key;
  r.status = failures == 0 ? "converged" : "partial";
  if (!directory.empty()) {
    detail::ensure_directory(directory);
    write_file_atomic(join_path(directory, "sweep.csv"), table.str());
    write_report(r, directory);
  }
  return r;
}

std::vector<std::string> check_report_consistency(const std::string& directory, double tolerance) {
  namespace fs = std::filesystem;
  std::vector<std::string> issues;
  const RunReport r = load_report(join_path(directory, "report.json"));
  auto scalar = [&](const std::string& name) -> std::optional<double> {
    const auto it = r.scalars.find(name);
    return it == r.scalars.end() ? std::nullopt : std::optional<double>(it->second);
  };
  auto compare = [&](const std::string& what, double reported, double derived) {
    if (std::abs(reported - derived) > tolerance * (1.0 + std::abs(reported))) {
      issues.push_back(what + ": report " + detail::format_double(reported) + " vs artifacts " +
                       detail::format_double(derived));
    }
  };

  const auto dt = scalar("dt");
  const auto h = scalar("h");
  const std::string norms_path = join_path(directory, "control_norms.csv");
  if (fs::exists(norms_path) && dt && scalar("N_value")) {
    double energy = 0.0;
    for (double v : detail::read_csv(norms_path).column("norm")) energy += v * v;
    compare("N_value", *scalar("N_value"), *dt * energy);
  }
  auto expected_norm_of = [&](const std::string& file) {
    const detail::CsvData data = detail::read_csv(join_path(directory, file));
    const auto p = data.column("probability");
    const auto v = data.column("value");
    double sq = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) sq += p[i] * v[i] * v[i];
    return std::sqrt(sq * *h);
  };
  if (h && fs::exists(join_path(directory, "terminal_state.csv")) && scalar("constraint_slack") &&
      scalar("epsilon")) {
    compare("constraint_slack", *scalar("constraint_slack"),
            expected_norm_of("terminal_state.csv") - *scalar("epsilon"));
  }
  if (h && fs::exists(join_path(directory, "eta_star.csv")) && scalar("eta_norm")) {
    compare("eta_norm", *scalar("eta_norm"), expected_norm_of("eta_star.csv"));
  }
  const std::string h_path = join_path(directory, "H.csv");
  if (h && fs::exists(h_path) && scalar("c_alpha") && scalar("alpha")) {
    const std::vector<double> values = detail::read_csv(h_path).column("value");
    const Grid grid(static_cast<int>(values.size()), r.config_echo.at("grid").at("length").get<double>());
    const Field H = Eigen::Map<const Field>(values.data(), static_cast<Eigen::Index>(values.size()));
    compare("c_alpha", *scalar("c_alpha"), compute_c_alpha(grid, H, *scalar("alpha")));
  }
  const std::string ind_path = join_path(directory, "indicator.csv");
  if (h && fs::exists(ind_path) && scalar("achieved_mass")) {
    double mass = 0.0;
    for (double v : detail::read_csv(ind_path).column("value")) mass += v;
    compare("achieved_mass", *scalar("achieved_mass"), mass * *h);
  }
  return issues;
}

}  // namespace stochact
