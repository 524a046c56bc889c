#pragma once

#include "stochact/forward_backward.hpp"
#include "stochact/grid.hpp"
#include "stochact/scenario_tree.hpp"

#include <limits>
#include <optional>
#include <string_view>

namespace stochact {

/// Minimum-norm approximate control problem for a fixed actuator density.
///
/// The constraint is taken as sqrt(E||y(T)||^2) <= epsilon, the form that
/// pairs with the epsilon-weight of the dual functional
///
///   J(eta) = dt/2 sum_k E||obs_k(eta)||^2 + epsilon sqrt(E||eta||^2) + <y0, z_0(eta)>.
struct ControlProblem {
  Grid grid;
  TreeTopology tree;
  Propagator prop;
  NoiseCoefficient noise;
  double epsilon;
  Field y0;
  Field beta;
  /// Radius of the search ball for eta; infinity disables the projection.
  double ball_radius = std::numeric_limits<double>::infinity();

  /// Checks epsilon > 0, beta in [0, 1] and all shapes; throws on violation.
  void validate() const;
  ControlProblem with_beta(Field new_beta) const;
};

enum class SolveStatus { converged, max_iterations, infeasible_at_tolerance };

std::string_view to_string(SolveStatus status);

struct SolverOptions {
  double tol_kkt = 1e-6;
  int max_iters = 50000;
  /// Starting point for the iteration (e.g. the previous outer iterate).
  std::optional<TerminalField> warm_start;
  /// Starting Lipschitz constant; 0 means estimate by power iteration.
  double lipschitz = 0.0;
  int power_iterations = 40;
};

/// The three terms of J and their sum.
struct JParts {
  double quadratic = 0.0;  ///< dt/2 sum_k E||obs_k||^2
  double penalty = 0.0;    ///< epsilon sqrt(E||eta||^2)
  double linear = 0.0;     ///< <y0, z_0>
  double total() const { return quadratic + penalty + linear; }
};

struct ControlSolution {
  TerminalField eta_star;
  AdaptedField u_star;     ///< K levels, u*_k = beta o (E_h zhat_k(eta*))
  TerminalField terminal;  ///< y(T) driven by u*
  TerminalField free_terminal;  ///< y(T) with u = 0
  double N_value = 0.0;    ///< dt sum_k E||u*_k||^2
  double J_value = 0.0;
  JParts J_parts;
  double eta_norm = 0.0;
  double free_terminal_norm = 0.0;
  double kkt_residual = 0.0;
  double lipschitz = 0.0;
  int iterations = 0;
  bool converged = false;
  SolveStatus status = SolveStatus::max_iterations;
};

struct OptimalityReport {
  double kkt = 0.0;               ///< r1: ||y_T(u*) + eps eta*/||eta*|| ||_E
  double identity = 0.0;          ///< r2: |E<y_T(u*), eta*> + eps ||eta*||_E|
  double constraint_slack = 0.0;  ///< r3: ||y_T(u*)||_E - eps
  double bound_ratio = 0.0;       ///< r4: N / (E||y0||^2)^2, logged only
  double value_identity = 0.0;    ///< |N + 2J|
  double kkt_scale = 1.0;         ///< 1 + ||free y_T||_E
  double identity_scale = 1.0;    ///< kkt_scale * max(1, ||eta*||_E)
  bool advisory = false;          ///< true when the solution is not converged
};

struct NormValue {
  double from_control = 0.0;  ///< dt sum_k E||u*_k||^2
  double from_J = 0.0;        ///< -2 J(eta*)
  bool converged = false;
  SolveStatus status = SolveStatus::max_iterations;
};

JParts eval_J_parts(const ControlProblem& problem, const TerminalField& eta);
double eval_J(const ControlProblem& problem, const TerminalField& eta);

/// Gradient of the smooth part of J in the E<.,.> inner product: the terminal
/// state of the forward system driven by u = obs(eta).
TerminalField grad_smooth(const ControlProblem& problem, const TerminalField& eta);

/// Proximal map of tau * sqrt(E||.||^2): (1 - tau / ||v||_E)_+ v.
TerminalField prox_shrink(const TreeTopology& tree, const Grid& grid,
                          const TerminalField& v, double tau);

/// Accelerated proximal gradient on J with backtracking and adaptive restart.
ControlSolution minimize_J(const ControlProblem& problem, const SolverOptions& options = {});

/// u*_k = obs_k(eta*).
AdaptedField synthesize_control(const ControlProblem& problem, const ControlSolution& solution);

OptimalityReport verify_optimality(const ControlProblem& problem,
                                   const ControlSolution& solution);

NormValue eval_N(const ControlProblem& problem, const SolverOptions& options = {});

/// dt * sum_k E||u_k||^2.
double control_energy(const Grid& grid, const TreeTopology& tree, const AdaptedField& u);

}  // namespace stochact
