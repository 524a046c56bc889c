// Exit gates at desk scale. One line per criterion; nonzero exit if any fails.
#include "../unit/test_helpers.hpp"

#include "stochact/actuator_game.hpp"
#include "stochact/levelset_rounding.hpp"
#include "stochact/runner.hpp"

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace stochact;
using namespace testing_support;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

ExperimentConfig load_fixture(const std::string& name, const std::vector<std::string>& overrides = {}) {
  ConfigResult r = load_config(std::string(STOCHACT_FIXTURES) + "/" + name, overrides);
  if (!r.ok()) throw std::runtime_error("fixture " + name + " is invalid");
  return *r.config;
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

Outcome exact_duality() {
  std::mt19937_64 rng(1001);
  std::uniform_int_distribution<int> pick_n(1, 32), pick_k(1, 8);
  std::uniform_real_distribution<double> pick_a(-2.0, 2.0);
  double worst = 0.0, worst_oracle = 0.0;
  double library_time = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int n = pick_n(rng), K = pick_k(rng);
    const Grid g(n, 1.0);
    const TreeTopology t = build_tree(K, 0.1);
    const bool implicit = trial % 4 == 3;
    const Propagator p(g, t.dt(), implicit ? Scheme::implicit_euler : Scheme::exact_spectral);
    std::vector<double> av(static_cast<std::size_t>(K));
    for (double& v : av) v = pick_a(rng);
    const NoiseCoefficient a(av, 2.0);
    const Field beta = random_field(rng, n, 0, 1), y0 = random_field(rng, n);
    const AdaptedField u = random_control(rng, t, n);
    const TerminalField eta = random_terminal(rng, t, n);

    Stopwatch sw;
    worst = std::max(worst, duality_residual(g, t, p, a, beta, y0, u, eta));
    library_time += sw.seconds();

    if (trial < 20 && K <= 6) {
      // Independent check: left side from the path oracle, right side from the library.
      const oracle::Instance in = oracle_instance(g, t, a, beta, y0, 0.1, implicit);
      const auto paths = oracle::forward_paths(in, to_paths(t, u));
      std::vector<oracle::Vec> yT;
      for (const auto& path : paths) yT.push_back(path.back());
      const double lhs = oracle::terminal_inner(in, yT, to_leaves(eta));
      const auto bwd = backward_solve(g, t, p, a, beta, eta);
      const double rhs = inner_product(g, y0, bwd.z0()) + time_expected_inner(g, t, u, bwd.obs);
      worst_oracle = std::max(worst_oracle, std::abs(lhs - rhs) / (1.0 + std::abs(lhs)));
    }
  }
  const bool ok = worst <= 1e-12 && worst_oracle <= 1e-12 && library_time <= 10.0;
  return {ok, fmt("max residual %.2e, oracle-side %.2e (limit 1e-12); %.2f s (budget 10 s)", worst,
                  worst_oracle, library_time)};
}

Outcome gradient_check() {
  std::mt19937_64 rng(2002);
  std::uniform_int_distribution<int> pick_n(1, 8), pick_k(1, 4);
  double worst = 0.0;
  Stopwatch sw;
  for (int inst = 0; inst < 10; ++inst) {
    const int n = pick_n(rng), K = pick_k(rng);
    const Grid g(n, 1.0);
    const TreeTopology t = build_tree(K, 0.1);
    std::vector<double> av;
    for (int k = 0; k < K; ++k) av.push_back(random_field(rng, 1, -2, 2)[0]);
    const ControlProblem p{g, t, Propagator(g, t.dt(), Scheme::exact_spectral), NoiseCoefficient(av, 2.0),
                           0.1, random_field(rng, n), random_field(rng, n, 0, 1)};
    const TerminalField eta = random_terminal(rng, t, n);
    const TerminalField grad = grad_smooth(p, eta);
    auto smooth = [&](const TerminalField& x) {
      const JParts parts = eval_J_parts(p, x);
      return parts.quadratic + parts.linear;
    };
    for (int dir = 0; dir < 20; ++dir) {
      const TerminalField d = random_terminal(rng, t, n);
      const double step = 1e-5;
      const double fd = (smooth(TerminalField{eta.values + step * d.values}) -
                         smooth(TerminalField{eta.values - step * d.values})) / (2 * step);
      const double an = expected_inner(t, g, grad, d);
      worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(an), 1e-300));
    }
  }
  const double time = sw.seconds();
  return {worst <= 1e-6 && time <= 30.0,
          fmt("max relative error %.2e over 200 directions (limit 1e-6); %.2f s (budget 30 s)", worst, time)};
}

Outcome oracle_equivalence() {
  const ExperimentConfig config = load_fixture("tiny.toml");
  const ControlProblem p = make_problem(config);
  Stopwatch main_clock;
  const ControlSolution s = minimize_J(p, make_solver_options(config));
  const double main_time = main_clock.seconds();
  Stopwatch oracle_clock;
  const oracle::SubgradientResult ref = oracle::projected_subgradient(dense_of(p), 1000000, 1e4);
  const double oracle_time = oracle_clock.seconds();
  const double N_oracle = -2.0 * ref.best_J;
  const double rel = std::abs(s.N_value - N_oracle) / std::abs(N_oracle);
  return {rel <= 1e-5 && main_time <= 1.0 && oracle_time <= 300.0,
          fmt("N %.10g vs oracle %.10g, rel %.2e (limit 1e-5); solve %.4f s (budget 1 s), oracle %.2f s "
              "(budget 300 s)",
              s.N_value, N_oracle, rel, main_time, oracle_time)};
}

Outcome optimality_identities() {
  Stopwatch sw;
  std::string detail;
  bool ok = true;
  const std::pair<const char*, ControlProblem> cases[] = {
      {"tiny", make_problem(load_fixture("tiny.toml"))},
      {"default", make_problem(load_fixture("default.toml"))},
  };
  for (const auto& [name, p] : cases) {
    const ControlSolution s = minimize_J(p, with_tol(1e-8));
    const OptimalityReport r = verify_optimality(p, s);
    const double kkt = r.kkt / r.kkt_scale;
    const double ident = r.identity / r.identity_scale;
    const double value = std::abs(s.N_value + 2 * s.J_value) / (1 + s.N_value);
    const bool here = s.converged && kkt <= 1e-6 && ident <= 1e-6 && r.constraint_slack <= 1e-6 && value <= 1e-6;
    ok = ok && here;
    detail += fmt("%s: kkt %.1e, identity %.1e, slack %.1e, |N+2J| %.1e; ", name, kkt, ident,
                  r.constraint_slack, value);
  }
  const double time = sw.seconds();
  return {ok && time <= 120.0, detail + fmt("%.2f s (budget 120 s)", time)};
}

Outcome game_structure() {
  const ControlProblem p = make_problem(load_fixture("tiny.toml"));
  const double alpha = 0.5;
  std::mt19937_64 rng(5005);
  DensitySampler sampler(p.grid, alpha, 5005);
  double affine = 0.0, concave = 0.0, convex = 0.0;
  Stopwatch sw;
  const SolverOptions inner = with_tol(1e-9);
  for (int s = 0; s < 200; ++s) {
    const ActuatorDensity a = sampler.next(), b = sampler.next();
    const TerminalField e1 = random_terminal(rng, p.tree, p.grid.n());
    const TerminalField e2 = random_terminal(rng, p.tree, p.grid.n());
    // Affine in theta: three collinear points.
    const double w = 0.37;
    const double fa = game_payoff(p, a.theta, e1), fb = game_payoff(p, b.theta, e1);
    const double fw = game_payoff(p, w * a.theta + (1 - w) * b.theta, e1);
    affine = std::max(affine, std::abs(fw - (w * fa + (1 - w) * fb)) / (1 + std::abs(fa) + std::abs(fb)));
    // Concave in eta.
    const double fm = game_payoff(p, a.theta, TerminalField{0.5 * (e1.values + e2.values)});
    concave = std::max(concave, 0.5 * (game_payoff(p, a.theta, e1) + game_payoff(p, a.theta, e2)) - fm);
    // Upper value convex in theta.
    const ActuatorDensity mid = make_density(p.grid, 0.5 * (a.theta + b.theta), alpha);
    const double va = best_response_eta(a, p, inner).value, vb = best_response_eta(b, p, inner).value;
    convex = std::max(convex, best_response_eta(mid, p, inner).value - 0.5 * (va + vb));
  }
  const double time = sw.seconds();
  const bool ok = affine <= 1e-12 && concave <= 1e-10 && convex <= 1e-6 && time <= 60.0;
  return {ok, fmt("affine %.1e (1e-12), concave excess %.1e (1e-10), convex excess %.1e (1e-6); %.2f s "
                  "(budget 60 s)",
                  affine, concave, convex, time)};
}

Outcome monotonicity() {
  const ExperimentConfig config = load_fixture("default.toml");
  ControlProblem p = make_problem(config);
  const SolverOptions options = make_solver_options(config);
  Stopwatch sw;
  double worst_eps = -INFINITY, previous = INFINITY;
  for (double eps : {0.05, 0.1, 0.2, 0.4}) {
    p.epsilon = eps;
    const double N = minimize_J(p, options).N_value;
    worst_eps = std::max(worst_eps, N - previous);
    previous = N;
  }
  p.epsilon = config.control.epsilon;
  std::mt19937_64 rng(6006);
  double worst_beta = -INFINITY;
  for (int pair = 0; pair < 10; ++pair) {
    const Field small = random_field(rng, p.grid.n(), 0.0, 0.9);
    const Field large = (small + random_field(rng, p.grid.n(), 0.0, 0.3)).cwiseMin(1.0);
    const double N_small = minimize_J(p.with_beta(small), options).N_value;
    const double N_large = minimize_J(p.with_beta(large), options).N_value;
    worst_beta = std::max(worst_beta, N_large - N_small);
  }
  const double time = sw.seconds();
  return {worst_eps <= 1e-8 && worst_beta <= 1e-8 && time <= 120.0,
          fmt("max increase in eps %.1e, under beta enlargement %.1e (slack 1e-8); %.2f s (budget 120 s)",
              std::max(worst_eps, 0.0), std::max(worst_beta, 0.0), time)};
}

struct GameRun {
  ControlProblem problem;
  EquilibriumReport eq;
  double seconds;
};

GameRun default_game() {
  const ExperimentConfig config = load_fixture("default.toml");
  GameSchedule schedule;
  schedule.outer_iters = config.solver.outer_iters;
  schedule.gap_tol = config.solver.gap_tol;
  schedule.inner = make_solver_options(config);
  schedule.tie_break = config.solver.tie_break;
  const ControlProblem p = make_problem(config);
  Stopwatch sw;
  EquilibriumReport eq = optimize_theta(p, config.control.alpha, nullptr, schedule);
  return {p, std::move(eq), sw.seconds()};
}

Outcome nash_certification(const GameRun& run) {
  const auto& eq = run.eq;
  const double gap = eq.nash_gap_theta + eq.nash_gap_eta;
  const double limit = 1e-4 * (1 + std::abs(eq.f_value));
  const bool ok = gap <= limit && eq.iterations <= 200 && run.seconds <= 120.0;
  return {ok, fmt("gap %.2e (theta %.2e, eta %.2e) vs limit %.2e after %d iterations; %.2f s (budget 120 s)",
                  gap, eq.nash_gap_theta, eq.nash_gap_eta, limit, eq.iterations, run.seconds)};
}

Outcome bang_bang(const GameRun& run) {
  const ExperimentConfig config = load_fixture("default.toml");
  const auto& eq = run.eq;
  const Grid& g = run.problem.grid;
  const double alpha = config.control.alpha;
  Stopwatch sw;
  const LevelSetResult r = round_to_indicator(g, eq.H, alpha, config.solver.tie_break);
  const double N_rounded = minimize_J(run.problem.with_beta(r.indicator.beta()), make_solver_options(config)).N_value;
  const double change = std::abs(N_rounded - eq.N_value);
  const double allowed = eq.nash_gap_theta + eq.nash_gap_eta + 1e-6;
  const BangBangReport rep = verify_bang_bang(g, r, eq.H, 1000, config.solver.seed);
  bool invariants = r.achieved_mass == alpha * g.measure() || std::abs(r.achieved_mass - alpha * g.measure()) <= 1e-15;
  for (int i = 0; i < g.n(); ++i) {
    if (eq.H[i] > r.c_alpha + r.tie_tolerance) invariants = invariants && r.indicator.theta[i] == 1.0;
    if (eq.H[i] < r.c_alpha - r.tie_tolerance) invariants = invariants && r.indicator.theta[i] == 0.0;
  }
  const double time = sw.seconds();
  const bool ok = change <= allowed && rep.violations == 0 && rep.samples == 1000 && invariants && time <= 60.0;
  return {ok, fmt("N change %.2e (allowed %.2e); %d/%d samples violate; indicator invariants %s; %.2f s "
                  "(budget 60 s)",
                  change, allowed, rep.violations, rep.samples, invariants ? "hold" : "BROKEN", time)};
}

Outcome deterministic_limit() {
  Stopwatch sw;
  double worst = 0.0;
  std::string detail;
  for (double eps : {0.02, 0.1}) {
    const ExperimentConfig config = load_fixture(
        "default.toml", {"time.steps=0", "time.path_steps=10", "noise.a=0.0",
                         "control.epsilon=" + std::to_string(eps), "solver.tol_kkt=1e-8"});
    const ControlProblem p = make_problem(config);
    const double N = minimize_J(p, make_solver_options(config)).N_value;
    const double ref = oracle::primal_min_norm(dense_of(p));
    const double rel = std::abs(N - ref) / ref;
    worst = std::max(worst, rel);
    detail += fmt("eps %.2g: N %.10g vs dense %.10g; ", eps, N, ref);
  }
  const double time = sw.seconds();
  return {worst <= 1e-6 && time <= 30.0,
          detail + fmt("max rel %.2e (limit 1e-6); %.2f s (budget 30 s)", worst, time)};
}

Outcome symmetry() {
  Stopwatch sw;
  const RunReport r = run_optimize_actuator(load_fixture("symmetric.toml"), "");
  const auto& H = r.fields.at("H");
  const auto& ind = r.fields.at("indicator");
  double hmax = 0.0, hdev = 0.0;
  bool exact = true;
  for (std::size_t i = 0; i < H.size(); ++i) {
    hmax = std::max(hmax, std::abs(H[i]));
    hdev = std::max(hdev, std::abs(H[i] - H[H.size() - 1 - i]));
    exact = exact && ind[i] == ind[ind.size() - 1 - i];
  }
  const double rel = hdev / hmax;
  const double time = sw.seconds();
  return {rel <= 1e-12 && exact && time <= 30.0,
          fmt("H mirror deviation %.1e relative (limit 1e-12); indicator %s; %.2f s (budget 30 s)", rel,
              exact ? "exactly symmetric" : "NOT symmetric", time)};
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& body) {
    Outcome out;
    try {
      out = body();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    if (!out.ok) ++failures;
    std::printf("%s  AC%-2d %s: %s\n", out.ok ? "PASS" : "FAIL", id, name, out.detail.c_str());
    std::fflush(stdout);
  };
  report(1, "exact discrete duality", exact_duality);
  report(2, "gradient vs finite differences", gradient_check);
  report(3, "oracle equivalence on the tiny instance", oracle_equivalence);
  report(4, "optimality identities", optimality_identities);
  report(5, "convexity, concavity and affinity of the payoff", game_structure);
  report(6, "monotonicity in epsilon and actuator", monotonicity);
  std::optional<GameRun> game;
  try {
    game = default_game();
  } catch (const std::exception& e) {
    std::printf("note: default game run failed: %s\n", e.what());
  }
  report(7, "Nash certification on the default instance", [&] {
    if (!game) return Outcome{false, "game run failed"};
    return nash_certification(*game);
  });
  report(8, "bang-bang recovery", [&] {
    if (!game) return Outcome{false, "game run failed"};
    return bang_bang(*game);
  });
  report(9, "deterministic limit vs dense direct solve", deterministic_limit);
  report(10, "reflection symmetry", symmetry);
  std::printf("%d of 10 acceptance criteria passed\n", 10 - failures);
  return failures == 0 ? 0 : 1;
}
