#pragma once

#include "stochact/grid.hpp"

namespace stochact {

/// Relaxed actuator: theta in [0, 1] per node with total mass
/// sum_i theta_i h = alpha * n * h. The control enters through
/// beta = theta^{1/2}, so ||beta||^2 = alpha |D| holds discretely.
struct ActuatorDensity {
  Field theta;
  double alpha = 0.0;

  Field beta() const { return theta.cwiseSqrt(); }
  double mass(const Grid& grid) const { return theta.sum() * grid.h(); }
};

/// Validates 0 <= theta <= 1 and the mass constraint (to `mass_tol`), throws
/// ConfigError otherwise.
ActuatorDensity make_density(const Grid& grid, Field theta, double alpha,
                             double mass_tol = 1e-12);

/// theta = alpha everywhere.
ActuatorDensity uniform_density(const Grid& grid, double alpha);

/// Checks alpha in (0, 1).
void require_alpha(double alpha);

/// Euclidean projection onto Theta (the capped simplex): theta_i =
/// clip(v_i + lambda, 0, 1) with the shift lambda chosen to meet the mass.
ActuatorDensity project_theta(const Grid& grid, const Field& v, double alpha);

}  // namespace stochact
