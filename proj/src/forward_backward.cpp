#include "stochact/forward_backward.hpp"

#include "parallel.hpp"
#include "stochact/error.hpp"

#include <cmath>
#include <string>

namespace stochact {

namespace {

constexpr long kMinColumnsPerWorker = 128;

void check_common(const Grid& grid, const TreeTopology& tree, const Propagator& prop,
                  const NoiseCoefficient& a, const Field& beta) {
  if (prop.size() != grid.n()) throw DimensionError("propagator size does not match grid");
  if (std::abs(prop.dt() - tree.dt()) > 1e-14 * tree.dt()) {
    throw DimensionError("propagator dt does not match tree dt");
  }
  if (a.steps() != tree.steps()) {
    throw DimensionError("noise coefficient has " + std::to_string(a.steps()) +
                         " steps, tree has " + std::to_string(tree.steps()));
  }
  if (beta.size() != grid.n()) throw DimensionError("actuator density size does not match grid");
}

// E_h * block, split over column chunks for wide levels.
LevelField propagate(const Propagator& prop, const LevelField& block) {
  LevelField out(block.rows(), block.cols());
  detail::parallel_for(block.cols(), kMinColumnsPerWorker, [&](long begin, long end) {
    out.middleCols(begin, end - begin).noalias() =
        prop.matrix() * block.middleCols(begin, end - begin);
  });
  return out;
}

}  // namespace

ForwardRecord forward_solve(const Grid& grid, const TreeTopology& tree,
                            const Propagator& prop, const NoiseCoefficient& a,
                            const Field& beta, const Field& y0, const AdaptedField& u) {
  check_common(grid, tree, prop, a, beta);
  if (y0.size() != grid.n()) throw DimensionError("initial state size does not match grid");
  const int K = tree.steps();
  if (u.level_count() != K) {
    throw DimensionError("control must have " + std::to_string(K) + " levels");
  }

  ForwardRecord rec;
  rec.y.levels.reserve(K + 1);
  rec.y.levels.emplace_back(y0);
  const double dt = tree.dt();
  for (int k = 0; k < K; ++k) {
    const LevelField& yk = rec.y.levels.back();
    if (u.levels[k].rows() != grid.n() || u.levels[k].cols() != tree.nodes(k)) {
      throw DimensionError("control level " + std::to_string(k) + " has wrong shape");
    }
    const LevelField state = propagate(prop, yk);
    const LevelField forcing = propagate(prop, beta.asDiagonal() * u.levels[k]);
    LevelField next(grid.n(), tree.nodes(k + 1));
    const long count = tree.nodes(k);
    for (long j = 0; j < count; ++j) {
      for (int c = 0; c < tree.branching(); ++c) {
        const double factor = 1.0 + a.at(k) * tree.increment(c);
        next.col(tree.child(j, c)) = factor * state.col(j) + dt * forcing.col(j);
      }
    }
    rec.y.levels.push_back(std::move(next));
  }
  return rec;
}

ForwardRecord forward_solve(const Grid& grid, const TreeTopology& tree,
                            const Propagator& prop, const NoiseCoefficient& a,
                            const Field& beta, const Field& y0) {
  return forward_solve(grid, tree, prop, a, beta, y0,
                       AdaptedField::zeros(tree, grid.n(), tree.steps()));
}

namespace detail {

SolveRecord backward_solve_signed(const Grid& grid, const TreeTopology& tree,
                                  const Propagator& prop, const NoiseCoefficient& a,
                                  const Field& beta, const TerminalField& eta,
                                  double martingale_sign) {
  check_common(grid, tree, prop, a, beta);
  if (eta.values.rows() != grid.n() || eta.values.cols() != tree.leaves()) {
    throw DimensionError("terminal datum must be " + std::to_string(grid.n()) + " x " +
                         std::to_string(tree.leaves()));
  }
  const int K = tree.steps();
  const double dt = tree.dt();

  SolveRecord rec;
  rec.z.levels.resize(K + 1);
  rec.Z.levels.resize(K);
  rec.zhat.levels.resize(K);
  rec.propagated.levels.resize(K);
  rec.obs.levels.resize(K);
  rec.z.levels[K] = eta.values;

  for (int k = K - 1; k >= 0; --k) {
    const LevelField& next = rec.z.levels[k + 1];
    rec.zhat.levels[k] = conditional_expectation(tree, k, next);
    rec.Z.levels[k] = martingale_sign * extract_Z(tree, k, next);
    rec.propagated.levels[k] = propagate(prop, rec.zhat.levels[k]);
    if (tree.is_deterministic() || a.at(k) == 0.0) {
      rec.z.levels[k] = rec.propagated.levels[k];
    } else {
      rec.z.levels[k] =
          rec.propagated.levels[k] + (a.at(k) * dt) * propagate(prop, rec.Z.levels[k]);
    }
    rec.obs.levels[k] = beta.asDiagonal() * rec.propagated.levels[k];
  }
  return rec;
}

}  // namespace detail

SolveRecord backward_solve(const Grid& grid, const TreeTopology& tree,
                           const Propagator& prop, const NoiseCoefficient& a,
                           const Field& beta, const TerminalField& eta) {
  return detail::backward_solve_signed(grid, tree, prop, a, beta, eta, 1.0);
}

double time_expected_inner(const Grid& grid, const TreeTopology& tree,
                           const AdaptedField& u, const AdaptedField& v) {
  const int K = tree.steps();
  if (u.level_count() != K || v.level_count() != K) {
    throw DimensionError("per-step fields must have " + std::to_string(K) + " levels");
  }
  Eigen::VectorXd per_step(K);
  for (int k = 0; k < K; ++k) {
    per_step[k] = expected_inner(tree, grid, k, u.levels[k], v.levels[k]);
  }
  return tree.dt() * pairwise_sum(per_step);
}

double duality_residual(const Grid& grid, const TreeTopology& tree,
                        const Propagator& prop, const NoiseCoefficient& a,
                        const Field& beta, const Field& y0, const AdaptedField& u,
                        const TerminalField& eta) {
  const ForwardRecord fwd = forward_solve(grid, tree, prop, a, beta, y0, u);
  const SolveRecord bwd = backward_solve(grid, tree, prop, a, beta, eta);
  const double lhs = expected_inner(tree, grid, fwd.terminal_field(), eta);
  const double rhs =
      inner_product(grid, y0, bwd.z0()) + time_expected_inner(grid, tree, u, bwd.obs);
  return std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
}

}  // namespace stochact
