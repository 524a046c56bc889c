#include <doctest.h>

#include "test_helpers.hpp"

#include "stochact/actuator_game.hpp"
#include "stochact/error.hpp"
#include "stochact/levelset_rounding.hpp"

#include <cmath>

using namespace stochact;
using namespace testing_support;

namespace {

ControlProblem symmetric_problem() {
  // Even y0 about L/2, uniform actuator: every operator commutes with the reflection.
  ControlProblem p = default_problem();
  p.grid = Grid(16, 1.0);
  p.tree = build_tree(4, 0.1);
  p.prop = Propagator(p.grid, p.tree.dt(), Scheme::exact_spectral);
  p.noise = NoiseCoefficient::constant(1.0, 4, 10.0);
  p.y0 = Field(16);
  for (int i = 0; i < 16; ++i) p.y0[i] = std::sin(M_PI * p.grid.node(i));
  p.beta = Field::Constant(16, 0.5);
  return p;
}

double mirror_gap(const Field& f) { return (f - f.reverse()).cwiseAbs().maxCoeff(); }

}  // namespace

TEST_SUITE("actuator_game") {

TEST_CASE("projection fixes points of the admissible set") {
  const Grid g(6, 1.0);
  Field v(6);
  v << 0.1, 0.9, 0.5, 0.5, 0.0, 1.0;
  const ActuatorDensity d = project_theta(g, v, 0.5);
  CHECK((d.theta - v).cwiseAbs().maxCoeff() == 0.0);
  CHECK(project_theta(g, Field::Ones(6), 0.5).theta.isApprox(Field::Constant(6, 0.5), 1e-15));
}

TEST_CASE("projection matches a multiplier scan") {
  const Grid g(4, 1.0);
  Field v(4);
  v << 2.0, 0.6, -1.0, 0.2;
  const ActuatorDensity d = project_theta(g, v, 0.5);
  const Field ref = oracle::scan_project(v, 0.5, 1e-7);
  CHECK((d.theta - ref).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(d.mass(g) == doctest::Approx(0.5 * g.measure()).epsilon(1e-14));
}

TEST_CASE("projection is the nearest admissible point") {
  const Grid g(10, 1.0);
  std::mt19937_64 rng(17);
  DensitySampler sampler(g, 0.3, 5);
  for (int trial = 0; trial < 20; ++trial) {
    const Field v = random_field(rng, 10, -1.0, 2.0);
    const Field p = project_theta(g, v, 0.3).theta;
    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.maxCoeff() <= 1.0);
    CHECK(p.sum() * g.h() == doctest::Approx(0.3 * g.measure()).epsilon(1e-13));
    for (int s = 0; s < 20; ++s) {
      const Field other = sampler.next().theta;
      CHECK((v - p).norm() <= (v - other).norm() + 1e-12);
    }
  }
}

TEST_CASE("density validation") {
  const Grid g(4, 1.0);
  CHECK_THROWS_AS(make_density(g, Field::Constant(4, 0.4), 0.5), ConfigError);
  CHECK_THROWS_AS(make_density(g, Field::Constant(3, 0.5), 0.5), DimensionError);
  CHECK_THROWS_AS(require_alpha(1.0), ConfigError);
  CHECK_THROWS_AS(require_alpha(0.0), ConfigError);
  CHECK(uniform_density(g, 0.25).beta().isApprox(Field::Constant(4, 0.5)));
}

TEST_CASE("best response") {
  ControlProblem p = tiny_problem();
  const Grid& g = p.grid;

  SUBCASE("zero initial state") {
    ControlProblem q = p;
    q.y0.setZero();
    const BestResponse br = best_response_eta(uniform_density(g, 0.5), q);
    CHECK(br.value == 0.0);
    CHECK(br.solution.eta_star.values.isZero(0.0));
  }
  SUBCASE("uniform density is the plain control problem") {
    const BestResponse br = best_response_eta(uniform_density(g, 0.5), p, with_tol(1e-8));
    const ControlSolution s = minimize_J(p.with_beta(Field::Constant(4, std::sqrt(0.5))), with_tol(1e-8));
    CHECK(std::abs(br.value - std::max(-s.J_value, 0.5 * s.N_value)) <= 1e-10);
  }
  SUBCASE("left-half indicator") {
    Field theta(4);
    theta << 1, 1, 0, 0;
    const BestResponse br = best_response_eta(make_density(g, theta, 0.5), p, with_tol(1e-8));
    const NormValue N = eval_N(p, with_tol(1e-8));
    CHECK(std::abs(br.value - N.from_control / 2) <= 1e-8 * N.from_control / 2);
  }
}

TEST_CASE("switching function") {
  const ControlProblem p = tiny_problem();
  CHECK(compute_H(p, TerminalField::zeros(p.tree, 4)).isZero(0.0));

  // Deterministic path of two steps on one node, eta = 1:
  // E_h zhat_1 = e^{dt lambda}, E_h zhat_0 = e^{2 dt lambda}.
  const Grid g(1, 1.0);
  const TreeTopology t = build_tree(0, 0.1, 2);
  ControlProblem det{g, t, Propagator(g, t.dt(), Scheme::exact_spectral), NoiseCoefficient::zero(2),
                     0.1, Field::Ones(1), Field::Ones(1)};
  const double mu = std::exp(-8.0 * t.dt());
  const Field H = compute_H(det, TerminalField{LevelField::Ones(1, 1)});
  CHECK(std::abs(H[0] - t.dt() * (mu * mu + std::pow(mu, 4))) <= 1e-12);

  const ControlProblem sym = symmetric_problem();
  const ControlSolution s = minimize_J(sym);
  const Field Hs = compute_H(sym, s.eta_star);
  CHECK(mirror_gap(Hs) <= 1e-12 * Hs.cwiseAbs().maxCoeff());
}

TEST_CASE("payoff structure") {
  const ControlProblem p = tiny_problem();
  std::mt19937_64 rng(12);
  DensitySampler sampler(p.grid, 0.5, 99);
  for (int trial = 0; trial < 200; ++trial) {
    const Field t1 = sampler.next().theta, t2 = sampler.next().theta;
    const TerminalField e1 = random_terminal(rng, p.tree, 4), e2 = random_terminal(rng, p.tree, 4);
    // Affine in theta: three collinear points.
    const double s = 0.3;
    const double f1 = game_payoff(p, t1, e1), f2 = game_payoff(p, t2, e1);
    CHECK(std::abs(game_payoff(p, s * t1 + (1 - s) * t2, e1) - (s * f1 + (1 - s) * f2)) <=
          1e-12 * (1 + std::abs(f1) + std::abs(f2)));
    // Concave in eta.
    const double mid = game_payoff(p, t1, TerminalField{0.5 * (e1.values + e2.values)});
    CHECK(mid >= 0.5 * (game_payoff(p, t1, e1) + game_payoff(p, t1, e2)) - 1e-10);
    // Payoff is -J at beta = sqrt(theta).
    CHECK(f1 == doctest::Approx(-eval_J(p.with_beta(t1.cwiseSqrt()), e1)).epsilon(1e-13));
  }
}

TEST_CASE("upper value is convex in theta") {
  const ControlProblem p = tiny_problem();
  DensitySampler sampler(p.grid, 0.5, 3);
  for (int trial = 0; trial < 30; ++trial) {
    const ActuatorDensity a = sampler.next(), b = sampler.next();
    const ActuatorDensity mid = make_density(p.grid, 0.5 * (a.theta + b.theta), 0.5);
    const SolverOptions o = with_tol(1e-9);
    const double va = best_response_eta(a, p, o).value, vb = best_response_eta(b, p, o).value;
    CHECK(best_response_eta(mid, p, o).value <= 0.5 * (va + vb) + 1e-6);
  }
}

TEST_CASE("Nash gap trivial cases") {
  ControlProblem p = tiny_problem();
  p.y0.setZero();
  const NashGap zero = nash_gap(uniform_density(p.grid, 0.5), TerminalField::zeros(p.tree, 4), p);
  CHECK(zero.gap_theta == 0.0);
  CHECK(zero.gap_eta == 0.0);

  // A single cell: H is constant on Theta, so theta cannot improve.
  const Grid g(1, 1.0);
  const TreeTopology t = build_tree(2, 0.1);
  ControlProblem one{g, t, Propagator(g, t.dt(), Scheme::exact_spectral),
                     NoiseCoefficient::constant(1.0, 2, 10.0), 0.01, Field::Ones(1), Field::Ones(1)};
  std::mt19937_64 rng(1);
  const NashGap single = nash_gap(uniform_density(g, 0.5), random_terminal(rng, t, 1), one);
  CHECK(single.gap_theta == doctest::Approx(0.0));
}

TEST_CASE("equilibrium on the tiny instance") {
  const ControlProblem p = tiny_problem();
  GameSchedule schedule;
  schedule.inner.tol_kkt = 1e-9;
  const EquilibriumReport eq = optimize_theta(p, 0.5, nullptr, schedule);
  CHECK(eq.converged);
  const double tol = 1e-4 * (1 + std::abs(eq.f_value));
  CHECK(eq.nash_gap_theta + eq.nash_gap_eta <= tol);
  CHECK(eq.theta_star.mass(p.grid) == doctest::Approx(0.5 * p.grid.measure()).epsilon(1e-12));

  // Random densities never do better.
  DensitySampler sampler(p.grid, 0.5, 2024);
  for (int s = 0; s < 1000; ++s) {
    const ActuatorDensity theta = sampler.next();
    const double N = minimize_J(p.with_beta(theta.beta()), with_tol(1e-9)).N_value;
    CHECK(eq.N_value <= N + 1e-6);
  }

  // Saddle ordering against random challengers.
  std::mt19937_64 rng(77);
  const double f_star = game_payoff(p, eq.theta_star.theta, eq.eta_star);
  for (int s = 0; s < 100; ++s) {
    const TerminalField eta = random_terminal(rng, p.tree, 4);
    const Field theta = sampler.next().theta;
    CHECK(game_payoff(p, eq.theta_star.theta, eta) <= f_star + tol);
    CHECK(f_star <= game_payoff(p, theta, eq.eta_star) + tol);
  }

  for (std::size_t i = 1; i < eq.trace.size(); ++i) CHECK(eq.trace[i].best_N <= eq.trace[i - 1].best_N);
}

TEST_CASE("zero initial state returns the initial density") {
  ControlProblem p = tiny_problem();
  p.y0.setZero();
  Field theta(4);
  theta << 0.2, 0.8, 0.6, 0.4;
  const ActuatorDensity init = make_density(p.grid, theta, 0.5);
  const EquilibriumReport eq = optimize_theta(p, 0.5, &init);
  CHECK(eq.N_value == 0.0);
  CHECK(eq.nash_gap_theta == 0.0);
  CHECK(eq.nash_gap_eta == 0.0);
  CHECK((eq.theta_star.theta - theta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("symmetric instances keep their symmetry") {
  const ControlProblem p = symmetric_problem();
  for (bool vertices : {true, false}) {
    GameSchedule schedule;
    schedule.vertex_candidates = vertices;
    schedule.outer_iters = vertices ? 200 : 30;
    schedule.tie_break = TieBreak::symmetric_pairing;
    const EquilibriumReport eq = optimize_theta(p, 0.25, nullptr, schedule);
    CHECK(mirror_gap(eq.theta_star.theta) <= 1e-10);
  }
}

TEST_CASE("pure subgradient schedule makes progress") {
  const ControlProblem p = tiny_problem();
  GameSchedule schedule;
  schedule.vertex_candidates = false;
  schedule.outer_iters = 50;
  const EquilibriumReport eq = optimize_theta(p, 0.5, nullptr, schedule);
  const double uniform_N = minimize_J(p.with_beta(Field::Constant(4, std::sqrt(0.5)))).N_value;
  CHECK(eq.N_value <= uniform_N + 1e-9);
  CHECK(eq.trace.size() >= 1);
}

}
