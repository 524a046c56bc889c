#include "stochact/stochact.h"

#include "stochact/error.hpp"
#include "stochact/runner.hpp"

#include <exception>
#include <new>
#include <string>

struct stochact_experiment {
  stochact::ExperimentConfig config;
  std::vector<std::string> warnings;
};

struct stochact_report {
  stochact::RunReport report;
  std::string json;
};

namespace {

thread_local std::string last_error;

stochact_status fail(stochact_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

stochact_status from_code(stochact::ErrorCode code) {
  switch (code) {
    case stochact::ErrorCode::config: return STOCHACT_ERR_CONFIG;
    case stochact::ErrorCode::parse: return STOCHACT_ERR_PARSE;
    case stochact::ErrorCode::dimension: return STOCHACT_ERR_DIMENSION;
    case stochact::ErrorCode::io: return STOCHACT_ERR_IO;
    case stochact::ErrorCode::invalid_argument: return STOCHACT_ERR_INVALID_ARGUMENT;
    case stochact::ErrorCode::internal: return STOCHACT_ERR_INTERNAL;
  }
  return STOCHACT_ERR_INTERNAL;
}

// Runs `body`, translating exceptions to status codes.
template <class F>
stochact_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const stochact::Error& e) {
    return fail(from_code(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(STOCHACT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(STOCHACT_ERR_INTERNAL, e.what());
  }
}

std::vector<std::string> collect(const char* const* overrides, size_t count) {
  std::vector<std::string> out;
  for (size_t i = 0; i < count; ++i) {
    if (!overrides[i]) throw stochact::Error(stochact::ErrorCode::invalid_argument, "null override");
    out.emplace_back(overrides[i]);
  }
  return out;
}

stochact_status adopt(stochact::ConfigResult result, stochact_experiment** out) {
  if (!result.ok()) {
    std::string message = "invalid configuration:";
    for (const auto& e : result.errors) message += "\n  " + e;
    return fail(STOCHACT_ERR_CONFIG, message);
  }
  *out = new stochact_experiment{std::move(*result.config), std::move(result.warnings)};
  return STOCHACT_OK;
}

}  // namespace

extern "C" {

const char* stochact_version(void) { return stochact::kVersion; }

const char* stochact_last_error(void) { return last_error.c_str(); }

stochact_status stochact_experiment_load(const char* path, const char* const* overrides,
                                         size_t override_count, stochact_experiment** out) {
  return guarded([&] {
    if (!path || !out) return fail(STOCHACT_ERR_INVALID_ARGUMENT, "null path or output handle");
    return adopt(stochact::load_config(path, collect(overrides, override_count)), out);
  });
}

stochact_status stochact_experiment_parse(const char* text, const char* const* overrides,
                                          size_t override_count, stochact_experiment** out) {
  return guarded([&] {
    if (!text || !out) return fail(STOCHACT_ERR_INVALID_ARGUMENT, "null text or output handle");
    return adopt(stochact::load_config_text(text, collect(overrides, override_count)), out);
  });
}

void stochact_experiment_free(stochact_experiment* experiment) { delete experiment; }

stochact_status stochact_experiment_set_seed(stochact_experiment* experiment, uint64_t seed) {
  if (!experiment) return fail(STOCHACT_ERR_INVALID_ARGUMENT, "null experiment");
  experiment->config.solver.seed = seed;
  experiment->config.echo["solver"]["seed"] = seed;
  return STOCHACT_OK;
}

const char* stochact_experiment_output_directory(const stochact_experiment* experiment) {
  return experiment ? experiment->config.output.directory.c_str() : nullptr;
}

size_t stochact_experiment_warning_count(const stochact_experiment* experiment) {
  return experiment ? experiment->warnings.size() : 0;
}

const char* stochact_experiment_warning(const stochact_experiment* experiment, size_t index) {
  if (!experiment || index >= experiment->warnings.size()) return nullptr;
  return experiment->warnings[index].c_str();
}

stochact_status stochact_run(const stochact_experiment* experiment, const char* command,
                             const char* out_dir, stochact_report** out) {
  return guarded([&] {
    if (!experiment || !command || !out) {
      return fail(STOCHACT_ERR_INVALID_ARGUMENT, "null experiment, command or output handle");
    }
    const std::string cmd = command;
    const std::string dir = out_dir ? out_dir : "";
    const auto& config = experiment->config;
    stochact::RunReport report;
    if (cmd == "solve-control") {
      report = stochact::run_solve_control(config, dir);
    } else if (cmd == "optimize-actuator") {
      report = stochact::run_optimize_actuator(config, dir);
    } else if (cmd == "round-levelset") {
      report = stochact::run_round_levelset(config, dir);
    } else if (cmd == "estimate-obs") {
      report = stochact::run_estimate_obs(config, dir);
    } else if (cmd == "sweep") {
      report = stochact::run_sweep(config, dir);
    } else {
      return fail(STOCHACT_ERR_INVALID_ARGUMENT, "unknown command '" + cmd + "'");
    }
    std::string json = report.serialize();
    *out = new stochact_report{std::move(report), std::move(json)};
    return STOCHACT_OK;
  });
}

void stochact_report_free(stochact_report* report) { delete report; }

const char* stochact_report_status(const stochact_report* report) {
  return report ? report->report.status.c_str() : nullptr;
}

const char* stochact_report_json(const stochact_report* report) {
  return report ? report->json.c_str() : nullptr;
}

stochact_status stochact_report_scalar(const stochact_report* report, const char* name, double* value) {
  if (!report || !name || !value) return fail(STOCHACT_ERR_INVALID_ARGUMENT, "null argument");
  const auto it = report->report.scalars.find(name);
  if (it == report->report.scalars.end()) {
    return fail(STOCHACT_ERR_INVALID_ARGUMENT, std::string("no scalar '") + name + "'");
  }
  *value = it->second;
  return STOCHACT_OK;
}

stochact_status stochact_report_field(const stochact_report* report, const char* name, double* values,
                                      size_t capacity, size_t* length) {
  if (!report || !name || !length) return fail(STOCHACT_ERR_INVALID_ARGUMENT, "null argument");
  const auto it = report->report.fields.find(name);
  if (it == report->report.fields.end()) {
    return fail(STOCHACT_ERR_INVALID_ARGUMENT, std::string("no field '") + name + "'");
  }
  *length = it->second.size();
  if (values) {
    const size_t count = std::min(capacity, it->second.size());
    std::copy_n(it->second.begin(), count, values);
  }
  return STOCHACT_OK;
}

stochact_status stochact_verify(const stochact_experiment* experiment, stochact_line_callback callback,
                                void* user) {
  return guarded([&] {
    if (!experiment) return fail(STOCHACT_ERR_INVALID_ARGUMENT, "null experiment");
    const auto result = stochact::run_verify(experiment->config, [&](const std::string& line) {
      if (callback) callback(line.c_str(), user);
    });
    if (result.passed()) return STOCHACT_OK;
    std::string failed;
    for (const auto& g : result.groups) {
      if (!g.passed) failed += (failed.empty() ? "" : ", ") + g.name;
    }
    return fail(STOCHACT_ERR_VERIFY_FAILED, "failing property groups: " + failed);
  });
}

stochact_status stochact_check_artifacts(const char* dir, stochact_line_callback callback, void* user) {
  return guarded([&] {
    if (!dir) return fail(STOCHACT_ERR_INVALID_ARGUMENT, "null directory");
    const auto issues = stochact::check_report_consistency(dir);
    for (const auto& issue : issues) {
      if (callback) callback(issue.c_str(), user);
    }
    if (issues.empty()) return STOCHACT_OK;
    return fail(STOCHACT_ERR_VERIFY_FAILED, std::to_string(issues.size()) + " inconsistent scalar(s)");
  });
}

}  // extern "C"
