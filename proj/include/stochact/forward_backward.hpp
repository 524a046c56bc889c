#pragma once

#include "stochact/grid.hpp"
#include "stochact/scenario_tree.hpp"

namespace stochact {

/// Solution of the forward controlled system on the tree.
struct ForwardRecord {
  AdaptedField y;  ///< levels 0..K
  const LevelField& terminal() const { return y.levels.back(); }
  TerminalField terminal_field() const { return TerminalField{y.levels.back()}; }
};

/// Output of the backward (adjoint) recursion for one terminal datum.
struct SolveRecord {
  AdaptedField z;           ///< levels 0..K, z_K = eta
  AdaptedField Z;           ///< levels 0..K-1, martingale coefficient
  AdaptedField zhat;        ///< levels 0..K-1, E[z_{k+1} | F_k]
  AdaptedField propagated;  ///< levels 0..K-1, E_h zhat_k
  AdaptedField obs;         ///< levels 0..K-1, beta o (E_h zhat_k)

  const Field z0() const { return z.levels.front().col(0); }
};

/// y_{k+1} = E_h((1 + a_k dw_k) y_k) + dt E_h(beta o u_k), y_0 = y0.
/// `u` holds K levels (0..K-1).
ForwardRecord forward_solve(const Grid& grid, const TreeTopology& tree,
                            const Propagator& prop, const NoiseCoefficient& a,
                            const Field& beta, const Field& y0, const AdaptedField& u);

/// Uncontrolled dynamics (u = 0).
ForwardRecord forward_solve(const Grid& grid, const TreeTopology& tree,
                            const Propagator& prop, const NoiseCoefficient& a,
                            const Field& beta, const Field& y0);

/// Algebraic adjoint of forward_solve:
///   z_k = E_h(zhat_k + a_k dt Z_k),  zhat_k = E[z_{k+1} | F_k],
///   obs_k = beta o (E_h zhat_k).
SolveRecord backward_solve(const Grid& grid, const TreeTopology& tree,
                           const Propagator& prop, const NoiseCoefficient& a,
                           const Field& beta, const TerminalField& eta);

/// |E<y_T, eta> - (<y0, z_0> + dt sum_k E<u_k, obs_k>)| / (1 + |E<y_T, eta>|).
double duality_residual(const Grid& grid, const TreeTopology& tree,
                        const Propagator& prop, const NoiseCoefficient& a,
                        const Field& beta, const Field& y0, const AdaptedField& u,
                        const TerminalField& eta);

/// dt * sum_k E<u_k, v_k> over K per-step levels.
double time_expected_inner(const Grid& grid, const TreeTopology& tree,
                           const AdaptedField& u, const AdaptedField& v);

namespace detail {
/// backward_solve with the martingale term scaled by `martingale_sign`.
/// Only the verification suite passes anything but +1, to show that a
/// broken adjoint is caught.
SolveRecord backward_solve_signed(const Grid& grid, const TreeTopology& tree,
                                  const Propagator& prop, const NoiseCoefficient& a,
                                  const Field& beta, const TerminalField& eta,
                                  double martingale_sign);
}  // namespace detail

}  // namespace stochact
