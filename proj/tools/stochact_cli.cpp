// Command-line front end. Talks to the library only through the C API.
#include "stochact/stochact.h"

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

enum Exit { kOk = 0, kUsage = 2, kRunFailed = 3, kVerifyFailed = 4 };

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> overrides;
};

int report_error(stochact_status status) {
  std::cerr << "error: " << stochact_last_error() << "\n";
  return status == STOCHACT_ERR_CONFIG || status == STOCHACT_ERR_PARSE ? kUsage : kRunFailed;
}

// Loads the experiment named by --config; verify may run without one.
stochact_experiment* load(const Options& opt, int& exit_code) {
  std::vector<const char*> raw;
  for (const auto& o : opt.overrides) raw.push_back(o.c_str());
  stochact_experiment* exp = nullptr;
  const stochact_status st =
      opt.config.empty() ? stochact_experiment_parse("", raw.data(), raw.size(), &exp)
                         : stochact_experiment_load(opt.config.c_str(), raw.data(), raw.size(), &exp);
  if (st != STOCHACT_OK) {
    exit_code = report_error(st);
    return nullptr;
  }
  for (size_t i = 0; i < stochact_experiment_warning_count(exp); ++i) {
    std::cerr << "warning: " << stochact_experiment_warning(exp, i) << "\n";
  }
  if (opt.seed) stochact_experiment_set_seed(exp, *opt.seed);
  return exp;
}

void print_line(const char* line, void*) { std::cout << line << "\n" << std::flush; }

int run_command(const std::string& command, const Options& opt) {
  int code = kOk;
  stochact_experiment* exp = load(opt, code);
  if (!exp) return code;
  const std::string out = opt.out.empty() ? stochact_experiment_output_directory(exp) : opt.out;
  stochact_report* report = nullptr;
  const stochact_status st = stochact_run(exp, command.c_str(), out.c_str(), &report);
  stochact_experiment_free(exp);
  if (st != STOCHACT_OK) return report_error(st);
  std::cout << stochact_report_json(report);
  std::cerr << "artifacts written to " << out << "\n";
  stochact_report_free(report);
  return kOk;
}

int run_verify(const Options& opt) {
  int code = kOk;
  stochact_experiment* exp = load(opt, code);
  if (!exp) return code;
  const stochact_status st = stochact_verify(exp, print_line, nullptr);
  stochact_experiment_free(exp);
  if (st == STOCHACT_ERR_VERIFY_FAILED) {
    std::cout << "verify: FAILED (" << stochact_last_error() << ")\n";
    return kVerifyFailed;
  }
  if (st != STOCHACT_OK) return report_error(st);
  std::cout << "verify: all property groups passed\n";
  return kOk;
}

int run_check(const std::string& dir) {
  const stochact_status st = stochact_check_artifacts(dir.c_str(), print_line, nullptr);
  if (st == STOCHACT_ERR_VERIFY_FAILED) return kVerifyFailed;
  if (st != STOCHACT_OK) return report_error(st);
  std::cout << "report scalars match the artifacts in " << dir << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-norm control and actuator placement for the stochastic heat equation"};
  app.set_version_flag("--version", stochact_version());
  app.require_subcommand(1);

  Options opt;
  std::string check_dir;
  struct Sub {
    const char* name;
    const char* help;
  };
  const Sub runs[] = {
      {"solve-control", "Minimum-norm control for a fixed actuator"},
      {"optimize-actuator", "Relaxed actuator game followed by level-set rounding"},
      {"round-levelset", "Round a switching function H to an indicator actuator"},
      {"estimate-obs", "Sampled lower bound of the observability constant"},
      {"sweep", "Repeat solve-control over sweep.values of sweep.key"},
      {"verify", "Run the property suite at desk scale"},
  };
  for (const auto& s : runs) {
    CLI::App* sub = app.add_subcommand(s.name, s.help);
    auto* cfg = sub->add_option("--config", opt.config, "TOML or JSON experiment file")->check(CLI::ExistingFile);
    if (std::string(s.name) != "verify") cfg->required();
    sub->add_option("--out", opt.out, "Output directory (default: output.directory from the config)");
    sub->add_option("--seed", opt.seed, "Seed for randomized certificates and samplers");
    sub->add_option("--override", opt.overrides, "Config override key=value (repeatable)")
        ->allow_extra_args(false);
  }
  CLI::App* check = app.add_subcommand("check-artifacts", "Re-derive report scalars from artifacts");
  check->add_option("dir", check_dir, "Directory holding report.json")->required();

  CLI11_PARSE(app, argc, argv);

  if (check->parsed()) return run_check(check_dir);
  for (const auto& s : runs) {
    if (!app.got_subcommand(s.name)) continue;
    if (std::string(s.name) == "verify") return run_verify(opt);
    return run_command(s.name, opt);
  }
  return kUsage;
}
