#pragma once

#include "stochact/actuator_density.hpp"
#include "stochact/grid.hpp"

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace stochact {

enum class TieBreak { lowest_index, symmetric_pairing };
enum class RoundingMode {
  fractional,  ///< exact mass, at most one fractional cell (a mirrored pair
               ///< under symmetric pairing)
  binary,      ///< entries in {0, 1}, mass off by at most h/2
};

TieBreak parse_tie_break(std::string_view name);
std::string_view to_string(TieBreak tie);
RoundingMode parse_rounding_mode(std::string_view name);
std::string_view to_string(RoundingMode mode);

struct LevelSetResult {
  double c_alpha = 0.0;
  ActuatorDensity indicator;
  /// Cells at level c(alpha) that received mass, in fill order.
  std::vector<int> tie_set_cells;
  /// Cells with a value strictly between 0 and 1.
  std::vector<int> fractional_cells;
  double achieved_mass = 0.0;
  /// Absolute tolerance used to decide H_i == c(alpha).
  double tie_tolerance = 0.0;
};

/// Number of cells the super-level set must cover: ceil(alpha * n), guarded
/// against representation error in alpha * n.
int required_cells(int n, double alpha);

/// c(alpha) = sup{c >= 0 : |{H >= c}| >= alpha |D|}, the ceil(alpha n)-th
/// largest entry of H.
double compute_c_alpha(const Grid& grid, const Field& H, double alpha);

/// Builds theta* = 1 on {H > c}, 0 on {H < c}, and fills the remaining mass
/// from the tie set {H = c} in tie-break order. Values within `relative_tie`
/// * max|H| of c count as ties, so mirror cells of a symmetric H that differ
/// in the last bits are treated alike.
LevelSetResult round_to_indicator(const Grid& grid, const Field& H, double alpha,
                                  TieBreak tie_break = TieBreak::lowest_index,
                                  RoundingMode mode = RoundingMode::fractional,
                                  double relative_tie = 1e-10);

/// sum_i theta_i H_i h, the objective maximized by the rounded indicator.
double linear_objective(const Grid& grid, const Field& theta, const Field& H);

/// max over Theta of sum theta H h (the value attained by round_to_indicator).
double max_linear_objective(const Grid& grid, const Field& H, double alpha);

struct BangBangReport {
  int samples = 0;
  int violations = 0;
  double max_violation = 0.0;  ///< max(0, candidate - indicator), must be <= 1e-10
  double min_margin = 0.0;
  double mean_margin = 0.0;
  double max_margin = 0.0;
  double indicator_objective = 0.0;
  std::vector<double> margins;  ///< one per compared density, extras last
};

/// Compares the indicator's linear objective with `samples` seeded random
/// densities in Theta and every entry of `extra` (e.g. the relaxed optimum).
BangBangReport verify_bang_bang(const Grid& grid, const LevelSetResult& result, const Field& H,
                                int samples, std::uint64_t seed,
                                std::span<const Field> extra = {});

/// Density drawn by projecting a uniform field on [-0.5, 1.5]^n onto Theta.
/// Shared by every sampling certificate so that seeds mean the same thing.
class DensitySampler {
 public:
  DensitySampler(const Grid& grid, double alpha, std::uint64_t seed);
  ActuatorDensity next();

 private:
  const Grid* grid_;
  double alpha_;
  std::uint64_t state_;
};

}  // namespace stochact
