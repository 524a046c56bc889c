#include "stochact/levelset_rounding.hpp"

#include "stochact/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

namespace stochact {

namespace {

void check_H(const Grid& grid, const Field& H) {
  if (H.size() != grid.n()) throw DimensionError("H size does not match grid");
  if (!H.allFinite()) throw Error(ErrorCode::invalid_argument, "H has non-finite entries");
}

// Fill order of the tie set. Each group receives its share of the remaining
// mass before the next group is considered.
std::vector<std::vector<int>> tie_groups(const std::vector<bool>& is_tie, TieBreak tie_break) {
  const int n = static_cast<int>(is_tie.size());
  std::vector<std::vector<int>> groups;
  std::vector<bool> used(n, false);
  for (int i = 0; i < n; ++i) {
    if (!is_tie[i] || used[i]) continue;
    const int mirror = n - 1 - i;
    if (tie_break == TieBreak::symmetric_pairing && mirror != i && is_tie[mirror]) {
      groups.push_back({i, mirror});
      used[mirror] = true;
    } else {
      groups.push_back({i});
    }
    used[i] = true;
  }
  return groups;
}

}  // namespace

TieBreak parse_tie_break(std::string_view name) {
  if (name == "lowest-index") return TieBreak::lowest_index;
  if (name == "symmetric-pairing") return TieBreak::symmetric_pairing;
  throw ConfigError("unknown tie_break '" + std::string(name) +
                    "' (expected lowest-index or symmetric-pairing)");
}

std::string_view to_string(TieBreak tie) {
  return tie == TieBreak::lowest_index ? "lowest-index" : "symmetric-pairing";
}

RoundingMode parse_rounding_mode(std::string_view name) {
  if (name == "fractional") return RoundingMode::fractional;
  if (name == "binary") return RoundingMode::binary;
  throw ConfigError("unknown rounding mode '" + std::string(name) +
                    "' (expected fractional or binary)");
}

std::string_view to_string(RoundingMode mode) {
  return mode == RoundingMode::fractional ? "fractional" : "binary";
}

int required_cells(int n, double alpha) {
  const int cells = static_cast<int>(std::ceil(alpha * n - 1e-9));
  return std::clamp(cells, 1, n);
}

double compute_c_alpha(const Grid& grid, const Field& H, double alpha) {
  require_alpha(alpha);
  check_H(grid, H);
  std::vector<double> sorted(H.data(), H.data() + H.size());
  const int k = required_cells(grid.n(), alpha);
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end(), std::greater<>());
  return sorted[k - 1];
}

LevelSetResult round_to_indicator(const Grid& grid, const Field& H, double alpha,
                                  TieBreak tie_break, RoundingMode mode, double relative_tie) {
  const double c = compute_c_alpha(grid, H, alpha);
  const int n = grid.n();
  LevelSetResult out;
  out.c_alpha = c;
  out.tie_tolerance = relative_tie * H.cwiseAbs().maxCoeff();

  Field theta = Field::Zero(n);
  std::vector<bool> is_tie(n, false);
  int above = 0;
  for (int i = 0; i < n; ++i) {
    if (H[i] > c + out.tie_tolerance) {
      theta[i] = 1.0;
      ++above;
    } else if (H[i] >= c - out.tie_tolerance) {
      is_tie[i] = true;
    }
  }

  double remaining = alpha * n - above;
  if (mode == RoundingMode::binary) remaining = std::round(remaining);
  for (const auto& group : tie_groups(is_tie, tie_break)) {
    if (remaining <= 0.0) break;
    const double size = static_cast<double>(group.size());
    if (mode == RoundingMode::binary && remaining < size) {
      // Not enough whole cells for the pair; fill the lower index only.
      theta[group.front()] = 1.0;
      out.tie_set_cells.push_back(group.front());
      remaining -= 1.0;
      continue;
    }
    const double share = std::min(1.0, remaining / size);
    for (int i : group) {
      theta[i] = share;
      out.tie_set_cells.push_back(i);
    }
    remaining -= share * size;
  }

  for (int i = 0; i < n; ++i) {
    if (theta[i] > 0.0 && theta[i] < 1.0) out.fractional_cells.push_back(i);
  }
  out.achieved_mass = theta.sum() * grid.h();
  out.indicator = ActuatorDensity{std::move(theta), alpha};
  return out;
}

double linear_objective(const Grid& grid, const Field& theta, const Field& H) {
  if (theta.size() != grid.n() || H.size() != grid.n()) {
    throw DimensionError("linear_objective: size mismatch");
  }
  return theta.dot(H) * grid.h();
}

double max_linear_objective(const Grid& grid, const Field& H, double alpha) {
  const LevelSetResult r = round_to_indicator(grid, H, alpha);
  return linear_objective(grid, r.indicator.theta, H);
}

DensitySampler::DensitySampler(const Grid& grid, double alpha, std::uint64_t seed)
    : grid_(&grid), alpha_(alpha), state_(seed) {
  require_alpha(alpha);
}

ActuatorDensity DensitySampler::next() {
  Field v(grid_->n());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    // splitmix64
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    z ^= z >> 31;
    v[i] = -0.5 + 2.0 * static_cast<double>(z >> 11) * 0x1.0p-53;
  }
  return project_theta(*grid_, v, alpha_);
}

BangBangReport verify_bang_bang(const Grid& grid, const LevelSetResult& result, const Field& H,
                                int samples, std::uint64_t seed, std::span<const Field> extra) {
  check_H(grid, H);
  BangBangReport report;
  report.samples = samples;
  report.indicator_objective = linear_objective(grid, result.indicator.theta, H);

  auto record = [&](const Field& theta) {
    const double margin = report.indicator_objective - linear_objective(grid, theta, H);
    report.margins.push_back(margin);
    const double violation = std::max(0.0, -margin);
    report.max_violation = std::max(report.max_violation, violation);
    if (violation > 1e-10) ++report.violations;
  };

  DensitySampler sampler(grid, result.indicator.alpha, seed);
  for (int s = 0; s < samples; ++s) record(sampler.next().theta);
  for (const Field& theta : extra) record(theta);

  if (!report.margins.empty()) {
    const auto [lo, hi] = std::minmax_element(report.margins.begin(), report.margins.end());
    report.min_margin = *lo;
    report.max_margin = *hi;
    double sum = 0.0;
    for (double m : report.margins) sum += m;
    report.mean_margin = sum / static_cast<double>(report.margins.size());
  }
  return report;
}

}  // namespace stochact
