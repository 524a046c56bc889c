#include "stochact/norm_control.hpp"

#include "stochact/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stochact {

namespace {

// Point of the iteration together with everything needed to step from it.
struct Evaluated {
  TerminalField eta;
  TerminalField grad;  // y_T(y0, obs(eta))
  double quadratic = 0.0;
  double smooth = 0.0;
  double norm = 0.0;
};

double e_inner(const ControlProblem& p, const TerminalField& x, const TerminalField& y) {
  return expected_inner(p.tree, p.grid, x, y);
}

double e_norm(const ControlProblem& p, const TerminalField& x) {
  return expected_norm(p.tree, p.grid, x);
}

TerminalField combine(double a, const TerminalField& x, double b, const TerminalField& y) {
  return TerminalField{a * x.values + b * y.values};
}

Evaluated evaluate(const ControlProblem& p, TerminalField eta) {
  const SolveRecord rec = backward_solve(p.grid, p.tree, p.prop, p.noise, p.beta, eta);
  const ForwardRecord fwd = forward_solve(p.grid, p.tree, p.prop, p.noise, p.beta, p.y0, rec.obs);
  Evaluated out;
  out.quadratic = 0.5 * control_energy(p.grid, p.tree, rec.obs);
  out.smooth = out.quadratic + inner_product(p.grid, p.y0, rec.z0());
  out.grad = fwd.terminal_field();
  out.norm = e_norm(p, eta);
  out.eta = std::move(eta);
  return out;
}

// Linear part of the gradient: eta -> y_T(0, obs(eta)).
TerminalField gramian_apply(const ControlProblem& p, const TerminalField& v) {
  const SolveRecord rec = backward_solve(p.grid, p.tree, p.prop, p.noise, p.beta, v);
  const Field zero = Field::Zero(p.grid.n());
  return forward_solve(p.grid, p.tree, p.prop, p.noise, p.beta, zero, rec.obs).terminal_field();
}

double estimate_lipschitz(const ControlProblem& p, const TerminalField& seed, int iterations) {
  // Fixed pseudo-random start so that the estimate is reproducible and not
  // orthogonal to the dominant mode by accident.
  TerminalField v = TerminalField::zeros(p.tree, p.grid.n());
  std::uint64_t state = 0x9E3779B97F4A7C15ULL;
  for (Eigen::Index j = 0; j < v.values.cols(); ++j) {
    for (Eigen::Index i = 0; i < v.values.rows(); ++i) {
      state = state * 6364136223846793005ULL + 1442695040888963407ULL;
      v.values(i, j) = 0.5 + static_cast<double>(state >> 11) * 0x1.0p-53;
    }
  }
  const double seed_norm = e_norm(p, seed);
  if (seed_norm > 0.0) v.values += seed.values / seed_norm;

  double estimate = 0.0;
  for (int it = 0; it < iterations; ++it) {
    const double nv = e_norm(p, v);
    if (!(nv > 0.0)) return 0.0;
    v.values /= nv;
    TerminalField gv = gramian_apply(p, v);
    estimate = e_norm(p, gv);
    if (!(estimate > 0.0)) return 0.0;
    v = std::move(gv);
  }
  return estimate;
}

TerminalField project_ball(const ControlProblem& p, TerminalField v) {
  if (!std::isfinite(p.ball_radius)) return v;
  const double nv = e_norm(p, v);
  if (nv > p.ball_radius) v.values *= p.ball_radius / nv;
  return v;
}

double kkt_at(const ControlProblem& p, const Evaluated& x, double lipschitz) {
  const bool on_ball = std::isfinite(p.ball_radius) && x.norm >= p.ball_radius * (1.0 - 1e-12);
  if (on_ball) {
    // Gradient mapping when the ball constraint is active.
    const TerminalField step = combine(1.0, x.eta, -1.0 / lipschitz, x.grad);
    const TerminalField next = project_ball(p, prox_shrink(p.tree, p.grid, step, p.epsilon / lipschitz));
    return lipschitz * e_norm(p, combine(1.0, x.eta, -1.0, next));
  }
  if (x.norm == 0.0) return std::max(0.0, e_norm(p, x.grad) - p.epsilon);
  return e_norm(p, combine(1.0, x.grad, p.epsilon / x.norm, x.eta));
}

// Stopping test: the KKT residual, the value identity N = -2J (whose
// residual is E<grad, eta> + eps ||eta||) and the constraint slack.
bool converged_at(const ControlProblem& p, const Evaluated& x, double lipschitz, double tol,
                  double scale) {
  if (kkt_at(p, x, lipschitz) > tol * scale) return false;
  const double identity = std::abs(e_inner(p, x.grad, x.eta) + p.epsilon * x.norm);
  if (identity > 0.5 * tol * (1.0 + 2.0 * x.quadratic)) return false;
  return e_norm(p, x.grad) - p.epsilon <= tol;
}

ControlSolution finish(const ControlProblem& p, const Evaluated& x, const TerminalField& free_terminal,
                       double lipschitz, int iterations, SolveStatus status) {
  ControlSolution s;
  const SolveRecord rec = backward_solve(p.grid, p.tree, p.prop, p.noise, p.beta, x.eta);
  s.eta_star = x.eta;
  s.u_star = rec.obs;
  s.terminal = x.grad;
  s.free_terminal = free_terminal;
  s.J_parts.quadratic = 0.5 * control_energy(p.grid, p.tree, rec.obs);
  s.J_parts.penalty = p.epsilon * x.norm;
  s.J_parts.linear = inner_product(p.grid, p.y0, rec.z0());
  s.J_value = s.J_parts.total();
  s.N_value = 2.0 * s.J_parts.quadratic;
  s.eta_norm = x.norm;
  s.free_terminal_norm = e_norm(p, free_terminal);
  s.lipschitz = lipschitz;
  s.kkt_residual = kkt_at(p, x, lipschitz > 0.0 ? lipschitz : 1.0);
  s.iterations = iterations;
  s.status = status;
  s.converged = status == SolveStatus::converged;
  return s;
}

}  // namespace

void ControlProblem::validate() const {
  if (!(epsilon > 0.0) || !std::isfinite(epsilon)) {
    throw ConfigError("control problem: epsilon must be positive and finite");
  }
  if (y0.size() != grid.n()) throw DimensionError("control problem: y0 size does not match grid");
  if (beta.size() != grid.n()) throw DimensionError("control problem: beta size does not match grid");
  for (Eigen::Index i = 0; i < beta.size(); ++i) {
    if (!(beta[i] >= 0.0 && beta[i] <= 1.0)) {
      throw ConfigError("control problem: beta[" + std::to_string(i) + "] outside [0, 1]");
    }
  }
  if (!y0.allFinite()) throw ConfigError("control problem: y0 has non-finite entries");
  if (prop.size() != grid.n()) throw DimensionError("control problem: propagator size mismatch");
  if (noise.steps() != tree.steps()) throw DimensionError("control problem: noise length mismatch");
  if (!(ball_radius > 0.0)) throw ConfigError("control problem: ball radius M must be positive");
}

ControlProblem ControlProblem::with_beta(Field new_beta) const {
  ControlProblem out = *this;
  out.beta = std::move(new_beta);
  return out;
}

std::string_view to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::converged:
      return "converged";
    case SolveStatus::max_iterations:
      return "max-iterations";
    case SolveStatus::infeasible_at_tolerance:
      return "infeasible-at-tolerance";
  }
  return "unknown";
}

double control_energy(const Grid& grid, const TreeTopology& tree, const AdaptedField& u) {
  return time_expected_inner(grid, tree, u, u);
}

JParts eval_J_parts(const ControlProblem& problem, const TerminalField& eta) {
  const SolveRecord rec =
      backward_solve(problem.grid, problem.tree, problem.prop, problem.noise, problem.beta, eta);
  JParts parts;
  parts.quadratic = 0.5 * control_energy(problem.grid, problem.tree, rec.obs);
  parts.penalty = problem.epsilon * e_norm(problem, eta);
  parts.linear = inner_product(problem.grid, problem.y0, rec.z0());
  return parts;
}

double eval_J(const ControlProblem& problem, const TerminalField& eta) {
  return eval_J_parts(problem, eta).total();
}

TerminalField grad_smooth(const ControlProblem& problem, const TerminalField& eta) {
  const SolveRecord rec =
      backward_solve(problem.grid, problem.tree, problem.prop, problem.noise, problem.beta, eta);
  return forward_solve(problem.grid, problem.tree, problem.prop, problem.noise, problem.beta,
                       problem.y0, rec.obs)
      .terminal_field();
}

TerminalField prox_shrink(const TreeTopology& tree, const Grid& grid, const TerminalField& v,
                          double tau) {
  if (!(tau > 0.0)) throw Error(ErrorCode::invalid_argument, "prox_shrink: tau must be positive");
  const double nv = expected_norm(tree, grid, v);
  if (nv <= tau) return TerminalField{LevelField::Zero(v.values.rows(), v.values.cols())};
  return TerminalField{(1.0 - tau / nv) * v.values};
}

ControlSolution minimize_J(const ControlProblem& problem, const SolverOptions& options) {
  problem.validate();
  const ControlProblem& p = problem;
  const Field zero_y = Field::Zero(p.grid.n());

  const TerminalField free_terminal =
      forward_solve(p.grid, p.tree, p.prop, p.noise, p.beta, p.y0).terminal_field();
  const double free_norm = e_norm(p, free_terminal);
  const double scale = 1.0 + free_norm;
  const TerminalField zero_eta = TerminalField::zeros(p.tree, p.grid.n());

  // 0 is optimal iff the free decay already meets the tolerance.
  if (free_norm <= p.epsilon) {
    Evaluated origin{zero_eta, free_terminal, 0.0, 0.0, 0.0};
    return finish(p, origin, free_terminal, 0.0, 0, SolveStatus::converged);
  }

  double lipschitz = options.lipschitz;
  if (!(lipschitz > 0.0)) {
    lipschitz = estimate_lipschitz(p, free_terminal, options.power_iterations);
    if (!(lipschitz > 1e-14 * scale)) {
      // The observation map vanishes; J is unbounded below.
      Evaluated origin{zero_eta, free_terminal, 0.0, 0.0, 0.0};
      return finish(p, origin, free_terminal, 0.0, 0, SolveStatus::infeasible_at_tolerance);
    }
    lipschitz *= 1.01;
  }

  Evaluated x = evaluate(p, options.warm_start ? project_ball(p, *options.warm_start) : zero_eta);
  double x_obj = x.smooth + p.epsilon * x.norm;
  Evaluated best = x;
  double best_obj = x_obj;
  if (converged_at(p, x, lipschitz, options.tol_kkt, scale)) {
    return finish(p, x, free_terminal, lipschitz, 0, SolveStatus::converged);
  }

  // Extrapolated point; its gradient and smooth value follow from x and the
  // previous iterate because the gradient is affine in eta.
  TerminalField y_eta = x.eta;
  TerminalField y_grad = x.grad;
  double y_smooth = x.smooth;
  double t = 1.0;
  const double divergence_bound = 1e12 * scale / p.epsilon;

  for (int iter = 1; iter <= options.max_iters; ++iter) {
    Evaluated next;
    for (int trial = 0;; ++trial) {
      const TerminalField step = combine(1.0, y_eta, -1.0 / lipschitz, y_grad);
      next = evaluate(p, project_ball(p, prox_shrink(p.tree, p.grid, step, p.epsilon / lipschitz)));
      const TerminalField diff = combine(1.0, next.eta, -1.0, y_eta);
      const double model = y_smooth + e_inner(p, y_grad, diff) +
                           0.5 * lipschitz * expected_sq_norm(p.tree, p.grid, diff);
      if (next.smooth <= model + 1e-12 * (1.0 + std::abs(model)) || trial >= 60) break;
      lipschitz *= 2.0;
    }

    const double next_obj = next.smooth + p.epsilon * next.norm;
    if (!std::isfinite(next_obj) || next.norm > divergence_bound) {
      return finish(p, best, free_terminal, lipschitz, iter, SolveStatus::infeasible_at_tolerance);
    }
    if (next_obj < best_obj) {
      best = next;
      best_obj = next_obj;
    }
    if (converged_at(p, next, lipschitz, options.tol_kkt, scale)) {
      return finish(p, next, free_terminal, lipschitz, iter, SolveStatus::converged);
    }

    if (next_obj > x_obj) {
      // Adaptive restart: drop the momentum.
      t = 1.0;
      y_eta = next.eta;
      y_grad = next.grad;
      y_smooth = next.smooth;
    } else {
      const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
      const double m = (t - 1.0) / t_next;
      y_eta = combine(1.0 + m, next.eta, -m, x.eta);
      y_grad = combine(1.0 + m, next.grad, -m, x.grad);
      // Quadratic smooth part: S(y) = 1/2 E<y, grad(y) + b>.
      y_smooth = 0.5 * (e_inner(p, y_eta, y_grad) + e_inner(p, y_eta, free_terminal));
      t = t_next;
    }
    x = std::move(next);
    x_obj = next_obj;
  }
  return finish(p, best, free_terminal, lipschitz, options.max_iters, SolveStatus::max_iterations);
}

AdaptedField synthesize_control(const ControlProblem& problem, const ControlSolution& solution) {
  return backward_solve(problem.grid, problem.tree, problem.prop, problem.noise, problem.beta,
                        solution.eta_star)
      .obs;
}

OptimalityReport verify_optimality(const ControlProblem& problem, const ControlSolution& solution) {
  const ControlProblem& p = problem;
  OptimalityReport r;
  const AdaptedField u = synthesize_control(p, solution);
  const TerminalField yT =
      forward_solve(p.grid, p.tree, p.prop, p.noise, p.beta, p.y0, u).terminal_field();
  const TerminalField free_terminal =
      forward_solve(p.grid, p.tree, p.prop, p.noise, p.beta, p.y0).terminal_field();
  const double eta_norm = e_norm(p, solution.eta_star);
  const double yT_norm = e_norm(p, yT);

  if (eta_norm == 0.0) {
    r.kkt = std::max(0.0, yT_norm - p.epsilon);
    r.identity = 0.0;
  } else {
    r.kkt = e_norm(p, combine(1.0, yT, p.epsilon / eta_norm, solution.eta_star));
    r.identity = std::abs(e_inner(p, yT, solution.eta_star) + p.epsilon * eta_norm);
  }
  r.constraint_slack = yT_norm - p.epsilon;

  const double N = control_energy(p.grid, p.tree, u);
  const double J = eval_J(p, solution.eta_star);
  r.value_identity = std::abs(N + 2.0 * J);
  const double y0_sq = inner_product(p.grid, p.y0, p.y0);
  r.bound_ratio = y0_sq > 0.0 ? N / (y0_sq * y0_sq) : 0.0;
  r.kkt_scale = 1.0 + e_norm(p, free_terminal);
  r.identity_scale = r.kkt_scale * std::max(1.0, eta_norm);
  r.advisory = !solution.converged;
  return r;
}

NormValue eval_N(const ControlProblem& problem, const SolverOptions& options) {
  const ControlSolution s = minimize_J(problem, options);
  NormValue v;
  v.from_control = s.N_value;
  v.from_J = -2.0 * s.J_value;
  v.converged = s.converged;
  v.status = s.status;
  return v;
}

}  // namespace stochact
