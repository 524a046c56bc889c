#pragma once

#include "stochact/grid.hpp"
#include "stochact/levelset_rounding.hpp"
#include "stochact/norm_control.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace stochact {

struct GridConfig {
  int n = 32;
  double length = 1.0;
};

struct TimeConfig {
  double T = 0.1;
  int steps = 10;       ///< binomial steps K; 0 selects deterministic mode
  int path_steps = 10;  ///< time steps of the deterministic path (steps = 0 only)
  Scheme scheme = Scheme::exact_spectral;
};

struct NoiseConfig {
  std::vector<double> a{1.0};  ///< one value (constant) or one per step
  double a_max = 10.0;
};

enum class ActuatorKind { uniform, indicator, explicit_values };

struct ActuatorConfig {
  ActuatorKind kind = ActuatorKind::uniform;
  double lo = 0.0;  ///< indicator: beta = 1 on nodes with lo <= x <= hi
  double hi = 0.5;
  std::vector<double> values;  ///< explicit beta values
};

struct ControlConfig {
  double epsilon = 0.1;
  double alpha = 0.25;
  std::optional<double> M;
  ActuatorConfig beta;
};

enum class InitialKind { sine, gaussian_bump, explicit_values };

struct InitialStateConfig {
  InitialKind kind = InitialKind::sine;
  double amplitude = 1.0;
  std::optional<double> mu;  ///< gaussian-bump centre, default length / 2
  double sigma = 0.1;
  std::vector<double> values;
};

struct SolverConfig {
  double tol_kkt = 1e-6;
  int max_iters = 50000;
  int outer_iters = 200;
  double step0 = 0.0;  ///< 0 = automatic
  double gap_tol = 1e-4;
  bool vertex_candidates = true;
  std::uint64_t seed = 20240917;
  TieBreak tie_break = TieBreak::lowest_index;
  RoundingMode rounding = RoundingMode::fractional;
  int certificate_samples = 1000;
  int obs_trials = 100;
};

struct OutputConfig {
  std::string directory = "out";
  std::vector<std::string> formats{"json", "csv"};
  bool has(const std::string& format) const;
};

struct SweepConfig {
  std::string key = "control.epsilon";
  std::vector<double> values;
};

struct VerifyConfig {
  double tolerance = 0.0;  ///< > 0 replaces every group tolerance
  std::string mutation = "none";
};

struct ExperimentConfig {
  GridConfig grid;
  TimeConfig time;
  NoiseConfig noise;
  ControlConfig control;
  InitialStateConfig initial_state;
  SolverConfig solver;
  OutputConfig output;
  SweepConfig sweep;
  VerifyConfig verify;
  std::optional<std::string> h_file;  ///< input.h_file for round-levelset

  /// Normalized document (defaults filled) used as the config echo.
  nlohmann::json echo;
};

struct ConfigResult {
  std::optional<ExperimentConfig> config;
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty() && config.has_value(); }
};

/// Parses TOML, or JSON when the text starts with '{'.
nlohmann::json parse_config_text(const std::string& text);

/// Applies "a.b.c=value" overrides; the value is read as a JSON literal when
/// it parses as one and as a string otherwise.
void apply_overrides(nlohmann::json& doc, const std::vector<std::string>& overrides);

/// Validates a document and reports every problem, not just the first.
ConfigResult validate_config(const nlohmann::json& doc);

/// Reads, overrides and validates; throws ConfigError listing every error.
ConfigResult load_config(const std::string& path, const std::vector<std::string>& overrides = {});
ConfigResult load_config_text(const std::string& text,
                              const std::vector<std::string>& overrides = {});

/// Problem at the configured actuator (beta from control.beta).
ControlProblem make_problem(const ExperimentConfig& config);
Field make_initial_state(const ExperimentConfig& config, const Grid& grid);
Field make_beta(const ExperimentConfig& config, const Grid& grid);
SolverOptions make_solver_options(const ExperimentConfig& config);

}  // namespace stochact
