#pragma once

#include "stochact/config.hpp"
#include "stochact/norm_control.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace stochact {

inline constexpr const char* kVersion = "0.1.0";

/// Outcome of one CLI-level run. `scalars`, `status`, `command`, `seed` and
/// the config echo go to report.json; wall times are kept apart (timings.json)
/// so that report.json is byte-identical across runs with the same inputs.
struct RunReport {
  std::string command;
  std::string status = "ok";
  std::uint64_t seed = 0;
  std::map<std::string, double> scalars;
  std::map<std::string, std::string> notes;
  nlohmann::json config_echo;
  std::map<std::string, double> wall_times;
  /// Named fields kept for API access (H, theta_star, indicator, ...).
  std::map<std::string, std::vector<double>> fields;

  nlohmann::json to_json() const;
  static RunReport from_json(const nlohmann::json& doc);
  std::string serialize() const;  ///< to_json().dump(2) plus trailing newline
};

/// Atomically writes `text` to `path` (temporary file then rename).
void write_file_atomic(const std::string& path, const std::string& text);
std::string read_file(const std::string& path);

/// Writes report.json (and timings.json) into `directory`.
void write_report(const RunReport& report, const std::string& directory);
RunReport load_report(const std::string& path);

/// Writes eta in the STACT01 binary layout: 8-byte magic "STACT01\0", then
/// leaf-major / node-major-within-leaf little-endian float64 values.
void write_eta_binary(const std::string& path, const TerminalField& eta);
TerminalField read_eta_binary(const std::string& path, int rows, long leaves);

/// Empty `directory` skips artifact output.
RunReport run_solve_control(const ExperimentConfig& config, const std::string& directory);
RunReport run_optimize_actuator(const ExperimentConfig& config, const std::string& directory);
RunReport run_round_levelset(const ExperimentConfig& config, const std::string& directory);
RunReport run_estimate_obs(const ExperimentConfig& config, const std::string& directory);
RunReport run_sweep(const ExperimentConfig& config, const std::string& directory);

struct ObservabilityEstimate {
  double estimate = 0.0;  ///< max ratio over the used samples (a lower bound on C)
  int used = 0;
  int excluded = 0;       ///< samples with a vanishing denominator
};

/// E||z(0)||^2 / (dt sum_k E||obs_k||^2) for one eta; nullopt when the
/// denominator vanishes.
std::optional<double> observability_ratio(const ControlProblem& problem, const TerminalField& eta);
ObservabilityEstimate estimate_observability_constant(const ControlProblem& problem,
                                                      std::span<const TerminalField> samples);
/// Seeded uniform samples on [-1, 1].
ObservabilityEstimate estimate_observability_constant(const ControlProblem& problem, int trials,
                                                      std::uint64_t seed);

struct VerifyGroup {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyResult {
  std::vector<VerifyGroup> groups;
  bool passed() const;
};

/// Runs the desk-scale property suite. Each group line is also passed to
/// `sink` as soon as it completes.
VerifyResult run_verify(const ExperimentConfig& config,
                        const std::function<void(const std::string&)>& sink = {});
std::string format_group(const VerifyGroup& group);

/// Recomputes report scalars from the artifacts in `directory`; returns one
/// message per mismatch (empty when consistent).
std::vector<std::string> check_report_consistency(const std::string& directory,
                                                  double tolerance = 1e-9);

}  // namespace stochact
