#include "stochact/scenario_tree.hpp"

#include "stochact/error.hpp"

#include <cmath>
#include <string>

namespace stochact {

namespace {

constexpr int kMaxSteps = 24;

void require_level(const TreeTopology& tree, int level, const LevelField& next) {
  if (level < 0 || level >= tree.steps()) {
    throw DimensionError("tree level " + std::to_string(level) + " out of range [0, " +
                         std::to_string(tree.steps()) + ")");
  }
  if (next.cols() != tree.nodes(level + 1)) {
    throw DimensionError("level " + std::to_string(level + 1) + " field has " +
                         std::to_string(next.cols()) + " nodes, expected " +
                         std::to_string(tree.nodes(level + 1)));
  }
}

double pairwise_sum_range(const double* data, Eigen::Index count) {
  if (count <= 8) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < count; ++i) s += data[i];
    return s;
  }
  const Eigen::Index half = count / 2;
  return pairwise_sum_range(data, half) + pairwise_sum_range(data + half, count - half);
}

}  // namespace

TreeTopology::TreeTopology(int steps, double horizon, int branching)
    : steps_(steps),
      horizon_(horizon),
      dt_(horizon / steps),
      sqrt_dt_(std::sqrt(horizon / steps)),
      branching_(branching) {}

TreeTopology TreeTopology::binomial(int steps, double horizon) {
  if (steps < 1 || steps > kMaxSteps) {
    throw ConfigError("binomial tree needs 1 <= steps <= " + std::to_string(kMaxSteps));
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("time horizon T must be positive and finite");
  }
  return TreeTopology(steps, horizon, 2);
}

TreeTopology TreeTopology::deterministic(int steps, double horizon) {
  if (steps < 1) {
    throw ConfigError("deterministic path needs at least one time step");
  }
  if (!(horizon > 0.0) || !std::isfinite(horizon)) {
    throw ConfigError("time horizon T must be positive and finite");
  }
  return TreeTopology(steps, horizon, 1);
}

TreeTopology build_tree(int steps, double horizon, int path_steps) {
  if (steps < 0) throw ConfigError("tree steps must be >= 0");
  if (steps == 0) return TreeTopology::deterministic(path_steps, horizon);
  return TreeTopology::binomial(steps, horizon);
}

long TreeTopology::nodes(int level) const {
  if (level < 0 || level > steps_) {
    throw DimensionError("tree level " + std::to_string(level) + " out of range");
  }
  return branching_ == 1 ? 1L : (1L << level);
}

double TreeTopology::probability(int level) const {
  return 1.0 / static_cast<double>(nodes(level));
}

double TreeTopology::increment(int child) const noexcept {
  if (branching_ == 1) return 0.0;
  return child == 0 ? sqrt_dt_ : -sqrt_dt_;
}

AdaptedField AdaptedField::zeros(const TreeTopology& tree, int rows, int level_count) {
  AdaptedField out;
  out.levels.reserve(level_count);
  for (int k = 0; k < level_count; ++k) {
    out.levels.emplace_back(LevelField::Zero(rows, tree.nodes(k)));
  }
  return out;
}

TerminalField TerminalField::zeros(const TreeTopology& tree, int rows) {
  return TerminalField{LevelField::Zero(rows, tree.leaves())};
}

NoiseCoefficient::NoiseCoefficient(std::vector<double> per_step, double bound)
    : values_(std::move(per_step)), bound_(bound) {
  if (!(bound >= 0.0)) throw ConfigError("noise bound a_max must be >= 0");
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!std::isfinite(values_[k]) || std::abs(values_[k]) > bound_) {
      throw ConfigError("noise coefficient a[" + std::to_string(k) +
                        "] violates |a| <= a_max = " + std::to_string(bound_));
    }
  }
}

NoiseCoefficient NoiseCoefficient::constant(double a, int steps, double bound) {
  return NoiseCoefficient(std::vector<double>(static_cast<std::size_t>(steps), a), bound);
}

NoiseCoefficient NoiseCoefficient::zero(int steps) { return constant(0.0, steps, 0.0); }

LevelField conditional_expectation(const TreeTopology& tree, int level,
                                   const LevelField& next) {
  require_level(tree, level, next);
  if (tree.is_deterministic()) return next;
  const long count = tree.nodes(level);
  LevelField out(next.rows(), count);
  for (long j = 0; j < count; ++j) {
    out.col(j) = 0.5 * (next.col(2 * j) + next.col(2 * j + 1));
  }
  return out;
}

LevelField extract_Z(const TreeTopology& tree, int level, const LevelField& next) {
  require_level(tree, level, next);
  const long count = tree.nodes(level);
  if (tree.is_deterministic()) return LevelField::Zero(next.rows(), count);
  const double scale = 1.0 / (2.0 * tree.sqrt_dt());
  LevelField out(next.rows(), count);
  for (long j = 0; j < count; ++j) {
    out.col(j) = scale * (next.col(2 * j) - next.col(2 * j + 1));
  }
  return out;
}

double pairwise_sum(const Eigen::Ref<const Eigen::VectorXd>& values) {
  if (values.size() == 0) return 0.0;
  const Eigen::VectorXd contiguous = values;
  return pairwise_sum_range(contiguous.data(), contiguous.size());
}

double expected_inner(const TreeTopology& tree, const Grid& grid, int level,
                      const LevelField& x, const LevelField& y) {
  if (x.cols() != tree.nodes(level) || y.cols() != x.cols()) {
    throw DimensionError("expectation: node count does not match tree level");
  }
  if (x.rows() != grid.n() || y.rows() != grid.n()) {
    throw DimensionError("expectation: field size does not match grid");
  }
  const Eigen::VectorXd per_node = x.cwiseProduct(y).colwise().sum().transpose();
  return pairwise_sum(per_node) * tree.probability(level) * grid.h();
}

double expected_sq_norm(const TreeTopology& tree, const Grid& grid, int level,
                        const LevelField& x) {
  return expected_inner(tree, grid, level, x, x);
}

double expected_sq_norm(const TreeTopology& tree, const Grid& grid, const TerminalField& x) {
  return expected_sq_norm(tree, grid, tree.steps(), x.values);
}

double expected_inner(const TreeTopology& tree, const Grid& grid, const TerminalField& x,
                      const TerminalField& y) {
  return expected_inner(tree, grid, tree.steps(), x.values, y.values);
}

double expected_norm(const TreeTopology& tree, const Grid& grid, const TerminalField& x) {
  return std::sqrt(expected_sq_norm(tree, grid, x));
}

}  // namespace stochact
