#include "stochact/config.hpp"

#include "stochact/actuator_density.hpp"
#include "stochact/error.hpp"

#include <toml.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>
#include <sstream>

namespace stochact {

using nlohmann::json;

namespace {

json toml_to_json(const toml::node& node) {
  if (const auto* table = node.as_table()) {
    json out = json::object();
    for (const auto& [key, value] : *table) out[std::string(key.str())] = toml_to_json(value);
    return out;
  }
  if (const auto* array = node.as_array()) {
    json out = json::array();
    for (const auto& value : *array) out.push_back(toml_to_json(value));
    return out;
  }
  if (const auto* v = node.as_integer()) return v->get();
  if (const auto* v = node.as_floating_point()) return v->get();
  if (const auto* v = node.as_boolean()) return v->get();
  if (const auto* v = node.as_string()) return v->get();
  throw Error(ErrorCode::parse, "config: unsupported TOML value (dates and times are not used)");
}

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"grid", {"n", "length"}},
      {"time", {"T", "steps", "path_steps", "scheme"}},
      {"noise", {"a", "a_max"}},
      {"control", {"epsilon", "alpha", "M", "beta"}},
      {"initial_state", {"kind", "amplitude", "mu", "sigma", "values"}},
      {"solver",
       {"tol_kkt", "max_iters", "outer_iters", "step0", "gap_tol", "vertex_candidates", "seed",
        "tie_break", "rounding", "certificate_samples", "obs_trials"}},
      {"output", {"directory", "formats"}},
      {"sweep", {"key", "values"}},
      {"verify", {"tolerance", "mutation"}},
      {"input", {"h_file"}},
  };
  return keys;
}

// Typed field access that records errors instead of throwing, so that one
// pass reports every problem in the document.
class Reader {
 public:
  Reader(const json& doc, std::vector<std::string>& errors) : doc_(doc), errors_(errors) {}

  const json* find(const std::string& section, const std::string& key) const {
    const auto s = doc_.find(section);
    if (s == doc_.end() || !s->is_object()) return nullptr;
    const auto k = s->find(key);
    return k == s->end() ? nullptr : &*k;
  }

  void number(const std::string& section, const std::string& key, double& out) {
    if (const json* v = find(section, key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else {
        fail(section, key, "expected a number");
      }
    }
  }

  void optional_number(const std::string& section, const std::string& key,
                       std::optional<double>& out) {
    if (const json* v = find(section, key)) {
      if (v->is_number()) {
        out = v->get<double>();
      } else if (!v->is_null()) {
        fail(section, key, "expected a number");
      }
    }
  }

  void integer(const std::string& section, const std::string& key, int& out) {
    if (const json* v = find(section, key)) {
      if (v->is_number_integer()) {
        out = v->get<int>();
      } else if (v->is_number() && std::floor(v->get<double>()) == v->get<double>()) {
        out = static_cast<int>(v->get<double>());
      } else {
        fail(section, key, "expected an integer");
      }
    }
  }

  void seed(const std::string& section, const std::string& key, std::uint64_t& out) {
    if (const json* v = find(section, key)) {
      if (v->is_number_unsigned()) {
        out = v->get<std::uint64_t>();
      } else if (v->is_number_integer() && v->get<long long>() >= 0) {
        out = static_cast<std::uint64_t>(v->get<long long>());
      } else {
        fail(section, key, "expected a non-negative integer");
      }
    }
  }

  void boolean(const std::string& section, const std::string& key, bool& out) {
    if (const json* v = find(section, key)) {
      if (v->is_boolean()) {
        out = v->get<bool>();
      } else {
        fail(section, key, "expected true or false");
      }
    }
  }

  void string(const std::string& section, const std::string& key, std::string& out) {
    if (const json* v = find(section, key)) {
      if (v->is_string()) {
        out = v->get<std::string>();
      } else {
        fail(section, key, "expected a string");
      }
    }
  }

  bool numbers(const std::string& section, const std::string& key, const json& v,
               std::vector<double>& out) {
    if (v.is_number()) {
      out = {v.get<double>()};
      return true;
    }
    if (!v.is_array()) {
      fail(section, key, "expected a number or an array of numbers");
      return false;
    }
    std::vector<double> values;
    for (const auto& e : v) {
      if (!e.is_number()) {
        fail(section, key, "array entries must be numbers");
        return false;
      }
      values.push_back(e.get<double>());
    }
    out = std::move(values);
    return true;
  }

  void fail(const std::string& section, const std::string& key, const std::string& what) {
    errors_.push_back(section + "." + key + ": " + what);
  }

 private:
  const json& doc_;
  std::vector<std::string>& errors_;
};

void check_unknown_keys(const json& doc, std::vector<std::string>& errors) {
  if (!doc.is_object()) {
    errors.push_back("config: top level must be a table");
    return;
  }
  for (const auto& [section, body] : doc.items()) {
    const auto it = schema().find(section);
    if (it == schema().end()) {
      errors.push_back(section + ": unknown section");
      continue;
    }
    if (!body.is_object()) {
      errors.push_back(section + ": expected a table");
      continue;
    }
    for (const auto& [key, value] : body.items()) {
      if (!it->second.count(key)) errors.push_back(section + "." + key + ": unknown key");
    }
  }
}

template <class Enum, class Parse>
void parse_enum(Reader& r, const std::string& section, const std::string& key, Enum& out,
                Parse parse) {
  std::string name;
  r.string(section, key, name);
  if (name.empty()) return;
  try {
    out = parse(name);
  } catch (const Error& e) {
    r.fail(section, key, e.what());
  }
}

json echo_of(const ExperimentConfig& c) {
  json doc;
  doc["grid"] = {{"n", c.grid.n}, {"length", c.grid.length}};
  doc["time"] = {{"T", c.time.T},
                 {"steps", c.time.steps},
                 {"path_steps", c.time.path_steps},
                 {"scheme", std::string(to_string(c.time.scheme))}};
  doc["noise"] = {{"a", c.noise.a}, {"a_max", c.noise.a_max}};
  json beta;
  switch (c.control.beta.kind) {
    case ActuatorKind::uniform:
      beta = {{"kind", "uniform"}};
      break;
    case ActuatorKind::indicator:
      beta = {{"kind", "indicator"}, {"lo", c.control.beta.lo}, {"hi", c.control.beta.hi}};
      break;
    case ActuatorKind::explicit_values:
      beta = {{"kind", "explicit"}, {"values", c.control.beta.values}};
      break;
  }
  doc["control"] = {{"epsilon", c.control.epsilon}, {"alpha", c.control.alpha}, {"beta", beta}};
  doc["control"]["M"] = c.control.M ? json(*c.control.M) : json(nullptr);
  json init;
  switch (c.initial_state.kind) {
    case InitialKind::sine:
      init = {{"kind", "sine"}, {"amplitude", c.initial_state.amplitude}};
      break;
    case InitialKind::gaussian_bump:
      init = {{"kind", "gaussian-bump"},
              {"amplitude", c.initial_state.amplitude},
              {"mu", c.initial_state.mu.value_or(0.5 * c.grid.length)},
              {"sigma", c.initial_state.sigma}};
      break;
    case InitialKind::explicit_values:
      init = {{"kind", "explicit"}, {"values", c.initial_state.values}};
      break;
  }
  doc["initial_state"] = init;
  doc["solver"] = {{"tol_kkt", c.solver.tol_kkt},
                   {"max_iters", c.solver.max_iters},
                   {"outer_iters", c.solver.outer_iters},
                   {"step0", c.solver.step0},
                   {"gap_tol", c.solver.gap_tol},
                   {"vertex_candidates", c.solver.vertex_candidates},
                   {"seed", c.solver.seed},
                   {"tie_break", std::string(to_string(c.solver.tie_break))},
                   {"rounding", std::string(to_string(c.solver.rounding))},
                   {"certificate_samples", c.solver.certificate_samples},
                   {"obs_trials", c.solver.obs_trials}};
  doc["output"] = {{"directory", c.output.directory}, {"formats", c.output.formats}};
  if (!c.sweep.values.empty()) doc["sweep"] = {{"key", c.sweep.key}, {"values", c.sweep.values}};
  if (c.h_file) doc["input"] = {{"h_file", *c.h_file}};
  return doc;
}

}  // namespace

bool OutputConfig::has(const std::string& format) const {
  return std::find(formats.begin(), formats.end(), format) != formats.end();
}

json parse_config_text(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    try {
      return json::parse(text);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::parse, std::string("config: invalid JSON: ") + e.what());
    }
  }
  try {
    return toml_to_json(toml::parse(text));
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: invalid TOML at line " << e.source().begin.line << ": " << e.description();
    throw Error(ErrorCode::parse, msg.str());
  }
}

void apply_overrides(json& doc, const std::vector<std::string>& overrides) {
  for (const std::string& item : overrides) {
    const auto eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + item + "' is not of the form key=value");
    }
    const std::string key = item.substr(0, eq);
    const std::string raw = item.substr(eq + 1);
    json value;
    try {
      value = json::parse(raw);
    } catch (const json::exception&) {
      value = raw;
    }
    json* node = &doc;
    std::size_t start = 0;
    while (true) {
      const auto dot = key.find('.', start);
      const std::string part = key.substr(start, dot == std::string::npos ? dot : dot - start);
      if (part.empty()) throw ConfigError("override key '" + key + "' has an empty component");
      if (!node->is_object()) *node = json::object();
      if (dot == std::string::npos) {
        (*node)[part] = value;
        break;
      }
      node = &(*node)[part];
      start = dot + 1;
    }
  }
}

ConfigResult validate_config(const json& doc) {
  ConfigResult result;
  auto& errors = result.errors;
  check_unknown_keys(doc, errors);
  if (!doc.is_object()) return result;

  ExperimentConfig c;
  Reader r(doc, errors);

  r.integer("grid", "n", c.grid.n);
  r.number("grid", "length", c.grid.length);
  if (c.grid.n < 1) r.fail("grid", "n", "must be >= 1");
  if (!(c.grid.length > 0.0)) r.fail("grid", "length", "must be > 0");

  r.number("time", "T", c.time.T);
  r.integer("time", "steps", c.time.steps);
  r.integer("time", "path_steps", c.time.path_steps);
  parse_enum(r, "time", "scheme", c.time.scheme, parse_scheme);
  if (!(c.time.T > 0.0)) r.fail("time", "T", "must be > 0");
  if (c.time.steps < 0 || c.time.steps > 16) r.fail("time", "steps", "must be in [0, 16]");
  if (c.time.path_steps < 1) r.fail("time", "path_steps", "must be >= 1");

  if (const json* a = r.find("noise", "a")) r.numbers("noise", "a", *a, c.noise.a);
  r.number("noise", "a_max", c.noise.a_max);
  const int step_count = c.time.steps == 0 ? c.time.path_steps : c.time.steps;
  if (!(c.noise.a_max >= 0.0)) r.fail("noise", "a_max", "must be >= 0");
  if (c.noise.a.empty()) {
    r.fail("noise", "a", "must not be empty");
  } else if (c.noise.a.size() != 1 && static_cast<int>(c.noise.a.size()) != step_count) {
    r.fail("noise", "a", "needs 1 value or one per time step (" + std::to_string(step_count) + ")");
  }
  for (double a : c.noise.a) {
    if (!std::isfinite(a) || std::abs(a) > c.noise.a_max) {
      r.fail("noise", "a", "entries must satisfy |a| <= a_max");
      break;
    }
  }
  if (c.time.steps == 0 && std::any_of(c.noise.a.begin(), c.noise.a.end(),
                                       [](double a) { return a != 0.0; })) {
    result.warnings.push_back("time.steps = 0 selects deterministic mode; noise.a is ignored");
  }

  r.number("control", "epsilon", c.control.epsilon);
  r.number("control", "alpha", c.control.alpha);
  r.optional_number("control", "M", c.control.M);
  if (!(c.control.epsilon > 0.0)) r.fail("control", "epsilon", "must be > 0");
  if (!(c.control.alpha > 0.0 && c.control.alpha < 1.0)) {
    r.fail("control", "alpha", "must lie in (0, 1)");
  }
  if (c.control.M && !(*c.control.M > 0.0)) r.fail("control", "M", "must be > 0");
  if (const json* beta = r.find("control", "beta")) {
    if (!beta->is_object()) {
      r.fail("control", "beta", "expected a table with a kind");
    } else {
      const std::string kind = beta->value("kind", std::string("uniform"));
      for (const auto& [key, value] : beta->items()) {
        if (key != "kind" && key != "lo" && key != "hi" && key != "values") {
          r.fail("control", "beta." + key, "unknown key");
        }
      }
      if (kind == "uniform") {
        c.control.beta.kind = ActuatorKind::uniform;
      } else if (kind == "indicator") {
        c.control.beta.kind = ActuatorKind::indicator;
        c.control.beta.lo = beta->value("lo", 0.0);
        c.control.beta.hi = beta->value("hi", 0.5 * c.grid.length);
        if (!(c.control.beta.lo < c.control.beta.hi)) {
          r.fail("control", "beta", "indicator needs lo < hi");
        }
      } else if (kind == "explicit") {
        c.control.beta.kind = ActuatorKind::explicit_values;
        if (!beta->contains("values") ||
            !r.numbers("control", "beta.values", beta->at("values"), c.control.beta.values)) {
          r.fail("control", "beta.values", "explicit beta needs a values array");
        } else if (static_cast<int>(c.control.beta.values.size()) != c.grid.n) {
          r.fail("control", "beta.values", "needs one value per grid node");
        } else if (std::any_of(c.control.beta.values.begin(), c.control.beta.values.end(),
                               [](double b) { return !(b >= 0.0 && b <= 1.0); })) {
          r.fail("control", "beta.values", "entries must lie in [0, 1]");
        }
      } else {
        r.fail("control", "beta.kind", "expected uniform, indicator or explicit");
      }
    }
  }

  std::string init_kind = "sine";
  r.string("initial_state", "kind", init_kind);
  r.number("initial_state", "amplitude", c.initial_state.amplitude);
  r.optional_number("initial_state", "mu", c.initial_state.mu);
  r.number("initial_state", "sigma", c.initial_state.sigma);
  if (init_kind == "sine") {
    c.initial_state.kind = InitialKind::sine;
  } else if (init_kind == "gaussian-bump") {
    c.initial_state.kind = InitialKind::gaussian_bump;
    if (!(c.initial_state.sigma > 0.0)) r.fail("initial_state", "sigma", "must be > 0");
  } else if (init_kind == "explicit") {
    c.initial_state.kind = InitialKind::explicit_values;
    const json* values = r.find("initial_state", "values");
    if (!values || !r.numbers("initial_state", "values", *values, c.initial_state.values)) {
      r.fail("initial_state", "values", "explicit initial state needs a values array");
    } else if (static_cast<int>(c.initial_state.values.size()) != c.grid.n) {
      r.fail("initial_state", "values", "needs one value per grid node");
    }
  } else {
    r.fail("initial_state", "kind", "expected sine, gaussian-bump or explicit");
  }

  r.number("solver", "tol_kkt", c.solver.tol_kkt);
  r.integer("solver", "max_iters", c.solver.max_iters);
  r.integer("solver", "outer_iters", c.solver.outer_iters);
  r.number("solver", "step0", c.solver.step0);
  r.number("solver", "gap_tol", c.solver.gap_tol);
  r.boolean("solver", "vertex_candidates", c.solver.vertex_candidates);
  r.seed("solver", "seed", c.solver.seed);
  parse_enum(r, "solver", "tie_break", c.solver.tie_break, parse_tie_break);
  parse_enum(r, "solver", "rounding", c.solver.rounding, parse_rounding_mode);
  r.integer("solver", "certificate_samples", c.solver.certificate_samples);
  r.integer("solver", "obs_trials", c.solver.obs_trials);
  if (!(c.solver.tol_kkt > 0.0)) r.fail("solver", "tol_kkt", "must be > 0");
  if (c.solver.max_iters < 1) r.fail("solver", "max_iters", "must be >= 1");
  if (c.solver.outer_iters < 1) r.fail("solver", "outer_iters", "must be >= 1");
  if (!(c.solver.step0 >= 0.0)) r.fail("solver", "step0", "must be >= 0 (0 = automatic)");
  if (!(c.solver.gap_tol > 0.0)) r.fail("solver", "gap_tol", "must be > 0");
  if (c.solver.certificate_samples < 0) r.fail("solver", "certificate_samples", "must be >= 0");
  if (c.solver.obs_trials < 1) r.fail("solver", "obs_trials", "must be >= 1");

  r.string("output", "directory", c.output.directory);
  if (const json* formats = r.find("output", "formats")) {
    if (!formats->is_array()) {
      r.fail("output", "formats", "expected an array of strings");
    } else {
      c.output.formats.clear();
      for (const auto& f : *formats) {
        const std::string name = f.is_string() ? f.get<std::string>() : std::string();
        if (name != "json" && name != "csv" && name != "bin") {
          r.fail("output", "formats", "entries must be json, csv or bin");
          break;
        }
        c.output.formats.push_back(name);
      }
    }
  }

  r.string("sweep", "key", c.sweep.key);
  if (const json* values = r.find("sweep", "values")) {
    r.numbers("sweep", "values", *values, c.sweep.values);
  }

  r.number("verify", "tolerance", c.verify.tolerance);
  r.string("verify", "mutation", c.verify.mutation);
  if (c.verify.mutation != "none" && c.verify.mutation != "flip-z-sign") {
    r.fail("verify", "mutation", "expected none or flip-z-sign");
  }

  std::string h_file;
  r.string("input", "h_file", h_file);
  if (!h_file.empty()) c.h_file = h_file;

  if (errors.empty()) {
    c.echo = echo_of(c);
    result.config = std::move(c);
  }
  return result;
}

ConfigResult load_config_text(const std::string& text, const std::vector<std::string>& overrides) {
  json doc = parse_config_text(text);
  if (doc.is_null()) doc = json::object();
  apply_overrides(doc, overrides);
  return validate_config(doc);
}

ConfigResult load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "config: cannot open '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return load_config_text(text.str(), overrides);
}

Field make_initial_state(const ExperimentConfig& config, const Grid& grid) {
  const InitialStateConfig& s = config.initial_state;
  Field y0(grid.n());
  for (int i = 0; i < grid.n(); ++i) {
    const double x = grid.node(i);
    switch (s.kind) {
      case InitialKind::sine:
        y0[i] = s.amplitude * std::sin(std::numbers::pi * x / grid.length());
        break;
      case InitialKind::gaussian_bump: {
        const double mu = s.mu.value_or(0.5 * grid.length());
        const double r = (x - mu) / s.sigma;
        y0[i] = s.amplitude * std::exp(-r * r);
        break;
      }
      case InitialKind::explicit_values:
        y0[i] = s.values.at(static_cast<std::size_t>(i));
        break;
    }
  }
  return y0;
}

Field make_beta(const ExperimentConfig& config, const Grid& grid) {
  const ActuatorConfig& b = config.control.beta;
  Field beta(grid.n());
  for (int i = 0; i < grid.n(); ++i) {
    switch (b.kind) {
      case ActuatorKind::uniform:
        beta[i] = std::sqrt(config.control.alpha);
        break;
      case ActuatorKind::indicator: {
        const double x = grid.node(i);
        beta[i] = (x >= b.lo && x <= b.hi) ? 1.0 : 0.0;
        break;
      }
      case ActuatorKind::explicit_values:
        beta[i] = b.values.at(static_cast<std::size_t>(i));
        break;
    }
  }
  return beta;
}

ControlProblem make_problem(const ExperimentConfig& config) {
  Grid grid(config.grid.n, config.grid.length);
  TreeTopology tree = build_tree(config.time.steps, config.time.T, config.time.path_steps);
  Propagator prop(grid, tree.dt(), config.time.scheme);
  std::vector<double> a = config.noise.a;
  if (a.size() == 1) a.assign(static_cast<std::size_t>(tree.steps()), a.front());
  if (tree.is_deterministic()) a.assign(static_cast<std::size_t>(tree.steps()), 0.0);
  NoiseCoefficient noise(std::move(a), config.noise.a_max);
  Field y0 = make_initial_state(config, grid);
  Field beta = make_beta(config, grid);
  ControlProblem problem{grid, tree, prop, noise, config.control.epsilon, y0, beta};
  if (config.control.M) problem.ball_radius = *config.control.M;
  problem.validate();
  return problem;
}

SolverOptions make_solver_options(const ExperimentConfig& config) {
  SolverOptions options;
  options.tol_kkt = config.solver.tol_kkt;
  options.max_iters = config.solver.max_iters;
  return options;
}

}  // namespace stochact
