#pragma once

#include "stochact/actuator_density.hpp"
#include "stochact/levelset_rounding.hpp"
#include "stochact/norm_control.hpp"

#include <vector>

namespace stochact {

/// The relaxed placement problem as a zero-sum game between the location
/// player (theta in Theta, minimizing) and the terminal-datum player (eta,
/// maximizing) with payoff
///
///   f(theta, eta) = -1/2 sum_i theta_i H_i(eta) h - eps ||eta||_E - <y0, z_0(eta)>,
///
/// which equals -J(eta; beta = theta^{1/2}).

struct BestResponse {
  ControlSolution solution;
  /// sup_eta f(theta, eta) = -J(eta*) = N / 2 at the optimum.
  double value = 0.0;
};

/// Inner problem at fixed theta; `problem.beta` is replaced by theta^{1/2}.
BestResponse best_response_eta(const ActuatorDensity& theta, const ControlProblem& problem,
                               const SolverOptions& options = {});

/// H_i = dt sum_k E|(E_h zhat_k)(x_i)|^2 for the adjoint state driven by eta.
/// Does not depend on beta.
Field compute_H(const ControlProblem& problem, const TerminalField& eta);
Field compute_H(const Grid& grid, const TreeTopology& tree, const SolveRecord& record);

/// f(theta, eta).
double game_payoff(const ControlProblem& problem, const Field& theta, const TerminalField& eta);

struct NashGap {
  double gap_theta = 0.0;  ///< f(theta, eta) - min_theta' f(theta', eta)
  double gap_eta = 0.0;    ///< sup_eta' f(theta, eta') - f(theta, eta)
  double payoff = 0.0;     ///< f(theta, eta)
  bool converged = true;   ///< inner solve status of the eta best response
  double total() const { return gap_theta + gap_eta; }
};

/// gap_eta uses the dual certificate sup_eta' f <= N(u*)/2 of the inner best
/// response, so it is an upper bound on the true gap up to the inner
/// solver's constraint slack.
NashGap nash_gap(const ActuatorDensity& theta, const TerminalField& eta,
                 const ControlProblem& problem, const SolverOptions& options = {});

struct GameSchedule {
  int outer_iters = 200;
  /// Initial step; 0 selects alpha |D| / (1 + max H) at the initial density.
  double step0 = 0.0;
  /// Stop once gap_theta + gap_eta <= gap_tol * (1 + |f|).
  double gap_tol = 1e-4;
  /// Also evaluate the level-set vertex of the current H at every iteration.
  bool vertex_candidates = true;
  TieBreak tie_break = TieBreak::symmetric_pairing;
  SolverOptions inner;
};

struct GameTraceEntry {
  int iteration = 0;
  double N = 0.0;
  double best_N = 0.0;
  double gap = 0.0;
  double step = 0.0;
  bool vertex = false;  ///< row belongs to a level-set vertex candidate
};

struct EquilibriumReport {
  ActuatorDensity theta_star;
  TerminalField eta_star;
  ControlSolution solution;  ///< inner solution at theta_star
  Field H;                   ///< H(eta_star)
  double N_value = 0.0;
  double f_value = 0.0;
  double nash_gap_theta = 0.0;
  double nash_gap_eta = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<GameTraceEntry> trace;
};

/// Projected subgradient descent on V(theta) = sup_eta f(theta, eta):
/// theta <- P_Theta(theta + s_t H / 2), s_t = s_0 / sqrt(t + 1), keeping the
/// best iterate by N.
EquilibriumReport optimize_theta(const ControlProblem& problem, double alpha,
                                 const ActuatorDensity* init = nullptr,
                                 const GameSchedule& schedule = {});

}  // namespace stochact
