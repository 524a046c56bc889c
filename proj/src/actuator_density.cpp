#include "stochact/actuator_density.hpp"

#include "stochact/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stochact {

namespace {

Field clip_shift(const Field& v, double shift) {
  return (v.array() + shift).min(1.0).max(0.0).matrix();
}

bool within_theta(const Field& v, double target_cells) {
  if (!v.allFinite() || v.minCoeff() < 0.0 || v.maxCoeff() > 1.0) return false;
  return std::abs(v.sum() - target_cells) <= 1e-14 * std::max(1.0, target_cells);
}

}  // namespace

void require_alpha(double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1), got " + std::to_string(alpha));
  }
}

ActuatorDensity make_density(const Grid& grid, Field theta, double alpha, double mass_tol) {
  require_alpha(alpha);
  if (theta.size() != grid.n()) throw DimensionError("density size does not match grid");
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    if (!(theta[i] >= 0.0 && theta[i] <= 1.0)) {
      throw ConfigError("density entry " + std::to_string(i) + " outside [0, 1]");
    }
  }
  const double mass = theta.sum() * grid.h();
  if (std::abs(mass - alpha * grid.measure()) > mass_tol) {
    throw ConfigError("density mass " + std::to_string(mass) + " differs from alpha |D| = " +
                      std::to_string(alpha * grid.measure()));
  }
  return ActuatorDensity{std::move(theta), alpha};
}

ActuatorDensity uniform_density(const Grid& grid, double alpha) {
  require_alpha(alpha);
  return ActuatorDensity{Field::Constant(grid.n(), alpha), alpha};
}

ActuatorDensity project_theta(const Grid& grid, const Field& v, double alpha) {
  require_alpha(alpha);
  if (v.size() != grid.n()) throw DimensionError("project_theta: field size does not match grid");
  if (!v.allFinite()) throw Error(ErrorCode::invalid_argument, "project_theta: non-finite input");
  const double target = alpha * grid.n();
  if (within_theta(v, target)) return ActuatorDensity{v, alpha};

  // sum_i clip(v_i + lambda, 0, 1) is nondecreasing in lambda, 0 at lo, n at hi.
  double lo = -v.maxCoeff();
  double hi = 1.0 - v.minCoeff();
  if (!(clip_shift(v, lo).sum() <= target && clip_shift(v, hi).sum() >= target)) {
    throw Error(ErrorCode::internal, "project_theta: bisection bracket lost");
  }
  for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(lo)); ++it) {
    const double mid = 0.5 * (lo + hi);
    (clip_shift(v, mid).sum() < target ? lo : hi) = mid;
  }
  double shift = 0.5 * (lo + hi);

  // The map is affine on the final piece; solve it exactly there.
  int ones = 0;
  int free_count = 0;
  double free_sum = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double s = v[i] + shift;
    if (s >= 1.0) {
      ++ones;
    } else if (s > 0.0) {
      ++free_count;
      free_sum += v[i];
    }
  }
  if (free_count > 0) {
    const double exact = (target - ones - free_sum) / free_count;
    if (std::abs(exact - shift) <= 1e-9) shift = exact;
  }
  Field theta = clip_shift(v, shift);

  // Spread the last rounding error over the free cells.
  const double residual = target - theta.sum();
  if (residual != 0.0 && free_count > 0) {
    for (Eigen::Index i = 0; i < theta.size(); ++i) {
      if (theta[i] > 0.0 && theta[i] < 1.0) {
        theta[i] = std::clamp(theta[i] + residual / free_count, 0.0, 1.0);
      }
    }
  }
  return ActuatorDensity{std::move(theta), alpha};
}

}  // namespace stochact
