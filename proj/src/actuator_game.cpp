#include "stochact/actuator_game.hpp"

#include "stochact/error.hpp"
#include "stochact/levelset_rounding.hpp"

#include <algorithm>
#include <cmath>

namespace stochact {

namespace {

struct Candidate {
  ActuatorDensity theta;
  ControlSolution solution;
  Field H;
  NashGap gap;
};

Candidate evaluate_candidate(const ControlProblem& problem, ActuatorDensity theta,
                             const SolverOptions& inner) {
  BestResponse br = best_response_eta(theta, problem, inner);
  Field H = compute_H(problem, br.solution.eta_star);
  NashGap gap;
  gap.payoff = -br.solution.J_value;
  gap.gap_theta = std::max(0.0, 0.5 * (max_linear_objective(problem.grid, H, theta.alpha) -
                                       linear_objective(problem.grid, theta.theta, H)));
  gap.gap_eta = std::max(0.0, br.value - gap.payoff);
  gap.converged = br.solution.converged;
  return Candidate{std::move(theta), std::move(br.solution), std::move(H), gap};
}

}  // namespace

BestResponse best_response_eta(const ActuatorDensity& theta, const ControlProblem& problem,
                               const SolverOptions& options) {
  const ControlProblem local = problem.with_beta(theta.beta());
  BestResponse out;
  out.solution = minimize_J(local, options);
  // Dual certificate: N(u*)/2 bounds sup f from above, -J(eta*) from below.
  out.value = std::max(-out.solution.J_value, 0.5 * out.solution.N_value);
  return out;
}

Field compute_H(const Grid& grid, const TreeTopology& tree, const SolveRecord& record) {
  const int K = tree.steps();
  Eigen::MatrixXd per_step(grid.n(), K);
  for (int k = 0; k < K; ++k) {
    const LevelField& w = record.propagated.levels[k];
    Eigen::VectorXd row(w.cols());
    for (Eigen::Index i = 0; i < w.rows(); ++i) {
      row = w.row(i).transpose().array().square();
      per_step(i, k) = pairwise_sum(row) * tree.probability(k);
    }
  }
  Field H(grid.n());
  for (Eigen::Index i = 0; i < H.size(); ++i) {
    H[i] = tree.dt() * pairwise_sum(per_step.row(i).transpose());
  }
  return H;
}

Field compute_H(const ControlProblem& problem, const TerminalField& eta) {
  const SolveRecord rec =
      backward_solve(problem.grid, problem.tree, problem.prop, problem.noise, problem.beta, eta);
  return compute_H(problem.grid, problem.tree, rec);
}

double game_payoff(const ControlProblem& problem, const Field& theta, const TerminalField& eta) {
  return -eval_J(problem.with_beta(theta.cwiseSqrt()), eta);
}

NashGap nash_gap(const ActuatorDensity& theta, const TerminalField& eta,
                 const ControlProblem& problem, const SolverOptions& options) {
  NashGap gap;
  gap.payoff = game_payoff(problem, theta.theta, eta);
  const Field H = compute_H(problem, eta);
  gap.gap_theta = std::max(0.0, 0.5 * (max_linear_objective(problem.grid, H, theta.alpha) -
                                       linear_objective(problem.grid, theta.theta, H)));
  SolverOptions warm = options;
  if (!warm.warm_start) warm.warm_start = eta;
  const BestResponse br = best_response_eta(theta, problem, warm);
  gap.gap_eta = std::max(0.0, br.value - gap.payoff);
  gap.converged = br.solution.converged;
  return gap;
}

EquilibriumReport optimize_theta(const ControlProblem& problem, double alpha,
                                 const ActuatorDensity* init, const GameSchedule& schedule) {
  require_alpha(alpha);
  problem.validate();
  const Grid& grid = problem.grid;
  ActuatorDensity theta = init ? make_density(grid, init->theta, alpha, 1e-10)
                               : uniform_density(grid, alpha);

  EquilibriumReport report;
  std::optional<Candidate> best;
  SolverOptions inner = schedule.inner;
  double step0 = schedule.step0;

  auto consider = [&](Candidate cand, int iteration, double step, bool vertex) {
    const double f = cand.gap.payoff;
    const double N = cand.solution.N_value;
    const double gap = cand.gap.total();
    const bool certified = gap <= schedule.gap_tol * (1.0 + std::abs(f));
    if (!best || N < best->solution.N_value || certified) best = std::move(cand);
    report.trace.push_back(GameTraceEntry{iteration, N, best->solution.N_value, gap, step, vertex});
    return certified;
  };

  bool certified = false;
  int iteration = 0;
  for (; iteration < schedule.outer_iters && !certified; ++iteration) {
    Candidate cur = evaluate_candidate(problem, theta, inner);
    if (iteration == 0 && !(step0 > 0.0)) {
      step0 = alpha * grid.measure() / (1.0 + cur.H.maxCoeff());
    }
    const double step = step0 / std::sqrt(iteration + 1.0);
    const Field H = cur.H;
    inner.warm_start = cur.solution.eta_star;
    certified = consider(std::move(cur), iteration, step, false);
    if (certified) break;

    if (schedule.vertex_candidates) {
      const LevelSetResult vertex =
          round_to_indicator(grid, H, alpha, schedule.tie_break);
      if ((vertex.indicator.theta - theta.theta).cwiseAbs().maxCoeff() > 1e-12) {
        certified = consider(evaluate_candidate(problem, vertex.indicator, inner), iteration,
                             step, true);
        if (certified) break;
      }
    }

    Field v = theta.theta + 0.5 * step * H;
    theta = project_theta(grid, v, alpha);
  }

  report.iterations = std::min(iteration + 1, schedule.outer_iters);
  report.converged = certified;
  report.theta_star = best->theta;
  report.eta_star = best->solution.eta_star;
  report.H = best->H;
  report.N_value = best->solution.N_value;
  report.f_value = best->gap.payoff;
  report.nash_gap_theta = best->gap.gap_theta;
  report.nash_gap_eta = best->gap.gap_eta;
  report.solution = std::move(best->solution);
  return report;
}

}  // namespace stochact
