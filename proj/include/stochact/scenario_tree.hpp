#pragma once

#include "stochact/grid.hpp"

#include <Eigen/Dense>

#include <vector>

namespace stochact {

/// One grid field per node of a single tree level, stored column-wise
/// (column j is node j of the level).
using LevelField = Eigen::MatrixXd;

/// Time discretization of [0, T] together with a discretization of the
/// Brownian filtration.
///
/// In binomial mode level k holds 2^k nodes and the children of node (k, j)
/// are (k+1, 2j) for the up move dw = +sqrt(dt) and (k+1, 2j+1) for the down
/// move dw = -sqrt(dt), each with probability 1/2. The tree is
/// non-recombining, so a node identifies a whole path.
///
/// In deterministic mode every level holds a single node, dw = 0, and the
/// expectations reduce to the classical (noise-free) problem.
class TreeTopology {
 public:
  static TreeTopology binomial(int steps, double horizon);
  static TreeTopology deterministic(int steps, double horizon);

  int steps() const noexcept { return steps_; }
  double horizon() const noexcept { return horizon_; }
  double dt() const noexcept { return dt_; }
  double sqrt_dt() const noexcept { return sqrt_dt_; }
  bool is_deterministic() const noexcept { return branching_ == 1; }
  /// 2 in binomial mode, 1 in deterministic mode.
  int branching() const noexcept { return branching_; }

  long nodes(int level) const;
  long leaves() const { return nodes(steps_); }
  /// Probability of each node of `level` (all nodes of a level are equally likely).
  double probability(int level) const;
  /// Brownian increment along child branch c (0 = up, 1 = down).
  double increment(int child) const noexcept;
  long child(long node, int c) const noexcept { return node * branching_ + c; }

  /// Time t_k = k * dt.
  double time(int level) const noexcept { return level * dt_; }

 private:
  TreeTopology(int steps, double horizon, int branching);

  int steps_;
  double horizon_;
  double dt_;
  double sqrt_dt_;
  int branching_;
};

/// K >= 1 builds the binomial tree with K steps. K = 0 selects deterministic
/// mode with `path_steps` time steps on a single path.
TreeTopology build_tree(int steps, double horizon, int path_steps = 1);

/// Adapted process: one LevelField per time level. Processes defined on
/// levels 0..K carry K+1 entries (states, z); per-step quantities (controls,
/// Z, conditional means, observations) carry K entries for levels 0..K-1.
struct AdaptedField {
  std::vector<LevelField> levels;

  static AdaptedField zeros(const TreeTopology& tree, int rows, int level_count);
  int level_count() const { return static_cast<int>(levels.size()); }
};

/// Random variable measurable at the final time: one grid field per leaf.
struct TerminalField {
  LevelField values;

  static TerminalField zeros(const TreeTopology& tree, int rows);
  bool all_finite() const { return values.allFinite(); }
};

/// Deterministic, step-wise constant noise coefficient a(t).
class NoiseCoefficient {
 public:
  NoiseCoefficient(std::vector<double> per_step, double bound);
  static NoiseCoefficient constant(double a, int steps, double bound);
  static NoiseCoefficient zero(int steps);

  double at(int step) const { return values_.at(step); }
  int steps() const noexcept { return static_cast<int>(values_.size()); }
  double bound() const noexcept { return bound_; }
  const std::vector<double>& values() const noexcept { return values_; }

 private:
  std::vector<double> values_;
  double bound_;
};

/// E[ . | F_k ]: averages the children of every node of `level`.
LevelField conditional_expectation(const TreeTopology& tree, int level,
                                   const LevelField& next);

/// Martingale-increment coefficient Z_k = E[ next * dw | F_k ] / dt, i.e.
/// (next_up - next_down) / (2 sqrt(dt)). Zero in deterministic mode.
LevelField extract_Z(const TreeTopology& tree, int level, const LevelField& next);

/// E||x||^2 over the nodes of `level`, summed pairwise in fixed node order.
double expected_sq_norm(const TreeTopology& tree, const Grid& grid, int level,
                        const LevelField& x);
double expected_sq_norm(const TreeTopology& tree, const Grid& grid,
                        const TerminalField& x);
/// E<x, y> over the nodes of `level`.
double expected_inner(const TreeTopology& tree, const Grid& grid, int level,
                      const LevelField& x, const LevelField& y);
double expected_inner(const TreeTopology& tree, const Grid& grid,
                      const TerminalField& x, const TerminalField& y);
double expected_norm(const TreeTopology& tree, const Grid& grid, const TerminalField& x);

/// Sum of `values` in a fixed pairwise order; the result does not depend on
/// how the terms were produced.
double pairwise_sum(const Eigen::Ref<const Eigen::VectorXd>& values);

}  // namespace stochact
