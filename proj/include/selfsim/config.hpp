#pragma once

// Flat key=value run configuration. Files hold one `key = value` per line with `#`
// comments; command-line flags are merged on top as another key/value map.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/evolve.hpp"
#include "selfsim/model.hpp"
#include "selfsim/profile.hpp"
#include "selfsim/radial.hpp"

namespace selfsim {

using ConfigMap = std::map<std::string, std::string>;

/// Shortest decimal string that reads back to the same double.
inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

struct KeyInfo {
  const char* name;
  const char* default_value;
  const char* help;
};

/// Every recognised key with its default. `nodes` is the radial node count; the
/// `profile` subcommand also reads it as the ζ-node count when `profile_nodes` is unset.
inline const std::vector<KeyInfo>& config_keys() {
  static const std::vector<KeyInfo> keys = {
      {"d", "2", "spatial dimension (>= 2)"},
      {"p", "2", "absorption exponent, 1 < p < p*(d)"},
      {"alpha", "1", "source strength (>= 0)"},
      {"n", "16", "mollifier inverse width"},
      {"nodes", "4096", "radial grid nodes"},
      {"R_out", "400", "outer radius (>= 6 sqrt(t_end))"},
      {"core_spacing", "0", "radial spacing at the axis; 0 selects 1/(16 n)"},
      {"R_probe", "1", "probe radius R of the boundary trace"},
      {"t_end", "1000", "final time"},
      {"outputs", "1,10,60,80,100,150,200,300,400,500,700,1000", "snapshot times (t_end is always added)"},
      {"dt_initial", "1e-6", "first time step"},
      {"dt_growth", "1.05", "geometric time-step growth"},
      {"dt_max", "0.01", "largest time step"},
      {"linear_mode", "false", "drop the absorption term"},
      {"full_newton", "false", "iterate the reaction to convergence each step"},
      {"zeta_min", "auto", "left end of the profile grid (<= -6)"},
      {"zeta_max", "auto", "right end of the profile grid (e^{2 zeta_max}/4 <= 700)"},
      {"profile_nodes", "2000", "profile grid nodes"},
      {"tol", "1e-10", "profile solver tolerance"},
      {"method", "collocation", "collocation|variational|both"},
      {"stationary_tol", "1e-12", "stationary solver tolerance"},
      {"window_min", "-2", "similarity window, lower zeta"},
      {"window_max", "1", "similarity window, upper zeta"},
      {"window_nodes", "61", "similarity window nodes"},
      {"slack", "0.01", "sandwich slack"},
      {"metric_target", "0.05", "target for the final convergence metric"},
      {"r_values", "0.1,0.5,1,2,5", "radii for the linear table"},
      {"t_values", "0.5,1,2,5,10", "times for the linear table"},
      {"sweep_d", "2", "sweep dimensions"},
      {"sweep_p", "1.5,2,4", "sweep exponents"},
      {"sweep_alpha", "1", "sweep source strengths"},
  };
  return keys;
}

struct RunConfig {
  ModelParams model{2, 2.0, 1.0};

  int n = 16;
  std::size_t nodes = 4096;
  bool nodes_set = false;
  double R_out = 400.0;
  double core_spacing = 0.0;
  double R_probe = 1.0;
  double t_end = 1000.0;
  std::vector<double> outputs;
  TimeStepPolicy steps;
  bool linear_mode = false;
  bool full_newton = false;

  double zeta_min = std::numeric_limits<double>::quiet_NaN();  ///< NaN: automatic
  double zeta_max = std::numeric_limits<double>::quiet_NaN();
  std::size_t profile_nodes = 2000;
  bool profile_nodes_set = false;
  double tol = 1e-10;
  std::string method = "collocation";
  double stationary_tol = 1e-12;

  double window_min = -2.0;
  double window_max = 1.0;
  std::size_t window_nodes = 61;
  double slack = 1e-2;
  double metric_target = 0.05;

  std::vector<double> r_values;
  std::vector<double> t_values;
  std::vector<double> sweep_d;
  std::vector<double> sweep_p;
  std::vector<double> sweep_alpha;

  ConfigMap resolved;  ///< every key with its effective value

  double axis_spacing() const { return core_spacing > 0.0 ? core_spacing : 1.0 / (16.0 * n); }

  RadialGrid radial_grid() const { return make_radial_grid(model.d, R_out, nodes, axis_spacing()); }

  ZetaGrid zeta_grid(std::size_t count) const {
    const ZetaGrid def = default_zeta_grid(model, count);
    return make_zeta_grid(std::isnan(zeta_min) ? def.zeta_min : zeta_min,
                          std::isnan(zeta_max) ? def.zeta_max : zeta_max, count);
  }

  EvolveOptions evolve_options() const {
    EvolveOptions o;
    o.linear_mode = linear_mode;
    o.full_newton = full_newton;
    o.probe_radius = R_probe;
    o.output_times = outputs;
    return o;
  }

  /// "key=value" pairs separated by spaces, sorted by key.
  std::string summary() const {
    std::string s;
    for (const auto& [k, v] : resolved) {
      if (!s.empty()) s += ' ';
      s += k + '=' + v;
    }
    return s;
  }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  double x = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(key, "expected a number, got '" + v + "'");
  return x;
}

inline long long parse_integer(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  long long x = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), x);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(key, "expected an integer, got '" + v + "'");
  return x;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  const std::string t = trim(v);
  if (t == "true" || t == "1" || t == "yes" || t == "on") return true;
  if (t == "false" || t == "0" || t == "no" || t == "off") return false;
  throw ConfigError(key, "expected true or false, got '" + v + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, item));
  if (out.empty()) throw ConfigError(key, "expected a comma-separated list of numbers");
  return out;
}

inline std::string format_list(const std::vector<double>& xs) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? "," : "") + format_double(xs[i]);
  return s;
}

inline bool known_key(const std::string& k) {
  for (const auto& info : config_keys())
    if (k == info.name) return true;
  return false;
}

inline void require(bool ok, const char* key, const std::string& msg) {
  if (!ok) throw ConfigError(key, msg);
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment.
inline ConfigMap parse_config_text(const std::string& text) {
  ConfigMap kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(t, "line " + std::to_string(lineno) + " is not of the form key = value");
    const std::string key = detail::trim(t.substr(0, eq));
    if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + " has an empty key");
    kv[key] = detail::trim(t.substr(eq + 1));
  }
  return kv;
}

inline ConfigMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", "cannot read '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

/// Typed, fully validated configuration; `overrides` wins over `file`.
inline RunConfig parse_config(const ConfigMap& file, const ConfigMap& overrides = {}) {
  ConfigMap raw;
  for (const auto& info : config_keys()) raw[info.name] = info.default_value;
  for (const auto* src : {&file, &overrides})
    for (const auto& [k, v] : *src) {
      if (!detail::known_key(k)) throw ConfigError(k, "unknown key");
      raw[k] = v;
    }
  auto set_in = [&](const char* k) { return file.count(k) || overrides.count(k); };

  using namespace detail;
  RunConfig c;
  const long long d = parse_integer("d", raw["d"]);
  require(d >= 2 && d <= 64, "d", "dimension must be an integer in [2, 64]");
  c.model.d = static_cast<int>(d);
  c.model.p = parse_double("p", raw["p"]);
  c.model.alpha = parse_double("alpha", raw["alpha"]);
  require(c.model.p > 1.0, "p", "must be > 1");
  require(c.model.p < serrin_exponent(c.model.d), "p",
          "must be < p*(d) = " + format_double(serrin_exponent(c.model.d)) + " for d = " + std::to_string(c.model.d));
  require(c.model.alpha >= 0.0 && std::isfinite(c.model.alpha), "alpha", "must be finite and >= 0");

  const long long n = parse_integer("n", raw["n"]);
  require(n >= 1 && n <= 1000000, "n", "must be an integer in [1, 1e6]");
  c.n = static_cast<int>(n);
  const long long nodes = parse_integer("nodes", raw["nodes"]);
  require(nodes >= 5, "nodes", "must be >= 5");
  c.nodes = static_cast<std::size_t>(nodes);
  c.nodes_set = set_in("nodes");
  c.R_out = parse_double("R_out", raw["R_out"]);
  c.core_spacing = parse_double("core_spacing", raw["core_spacing"]);
  c.R_probe = parse_double("R_probe", raw["R_probe"]);
  c.t_end = parse_double("t_end", raw["t_end"]);
  c.outputs = parse_list("outputs", raw["outputs"]);
  c.steps.dt_initial = parse_double("dt_initial", raw["dt_initial"]);
  c.steps.growth = parse_double("dt_growth", raw["dt_growth"]);
  c.steps.dt_max = parse_double("dt_max", raw["dt_max"]);
  c.linear_mode = parse_bool("linear_mode", raw["linear_mode"]);
  c.full_newton = parse_bool("full_newton", raw["full_newton"]);

  require(c.t_end > 0.0 && std::isfinite(c.t_end), "t_end", "must be finite and > 0");
  require(c.R_out >= 6.0 * std::sqrt(c.t_end), "R_out", "must be >= 6 sqrt(t_end) = " + format_double(6.0 * std::sqrt(c.t_end)));
  require(c.core_spacing >= 0.0, "core_spacing", "must be >= 0");
  require(c.R_probe > 0.0 && c.R_probe < 0.5 * c.R_out, "R_probe", "must lie in (0, R_out/2)");
  // Default snapshot times are clipped to a shorter run; explicit ones must fit.
  if (!set_in("outputs"))
    std::erase_if(c.outputs, [&](double t) { return t > c.t_end; });
  for (double t : c.outputs) require(t > 0.0 && t <= c.t_end, "outputs", "times must lie in (0, t_end]");
  require(c.steps.dt_initial > 0.0, "dt_initial", "must be > 0");
  require(c.steps.growth >= 1.0, "dt_growth", "must be >= 1");
  require(c.steps.dt_max >= c.steps.dt_initial, "dt_max", "must be >= dt_initial");
  {
    const RadialGrid g = c.radial_grid();
    require(g.nodes_below(1.0 / c.n) >= 8, "nodes", "grid must place at least 8 nodes inside [0, 1/n]; raise nodes or lower core_spacing");
  }

  if (raw["zeta_min"] != "auto") c.zeta_min = parse_double("zeta_min", raw["zeta_min"]);
  if (raw["zeta_max"] != "auto") c.zeta_max = parse_double("zeta_max", raw["zeta_max"]);
  const long long pn = parse_integer("profile_nodes", raw["profile_nodes"]);
  require(pn >= 5, "profile_nodes", "must be >= 5");
  c.profile_nodes = static_cast<std::size_t>(pn);
  c.profile_nodes_set = set_in("profile_nodes");
  c.tol = parse_double("tol", raw["tol"]);
  require(c.tol > 0.0, "tol", "must be > 0");
  c.method = trim(raw["method"]);
  require(c.method == "collocation" || c.method == "variational" || c.method == "both", "method",
          "must be collocation, variational or both");
  c.stationary_tol = parse_double("stationary_tol", raw["stationary_tol"]);
  require(c.stationary_tol > 0.0, "stationary_tol", "must be > 0");
  require(std::isnan(c.zeta_min) || c.zeta_min <= -6.0, "zeta_min", "must be <= -6");
  require(std::isnan(c.zeta_max) || std::exp(2.0 * c.zeta_max) / 4.0 <= 700.0, "zeta_max",
          "must satisfy e^{2 zeta_max}/4 <= 700");
  {
    const ZetaGrid zg = c.zeta_grid(c.profile_nodes);
    require(zg.zeta_max > zg.zeta_min, "zeta_max", "must exceed zeta_min");
  }

  c.window_min = parse_double("window_min", raw["window_min"]);
  c.window_max = parse_double("window_max", raw["window_max"]);
  const long long wn = parse_integer("window_nodes", raw["window_nodes"]);
  require(wn >= 2, "window_nodes", "must be >= 2");
  c.window_nodes = static_cast<std::size_t>(wn);
  require(c.window_max > c.window_min, "window_max", "must exceed window_min");
  c.slack = parse_double("slack", raw["slack"]);
  require(c.slack >= 0.0, "slack", "must be >= 0");
  c.metric_target = parse_double("metric_target", raw["metric_target"]);

  c.r_values = parse_list("r_values", raw["r_values"]);
  for (double r : c.r_values) require(r > 0.0, "r_values", "radii must be > 0");
  c.t_values = parse_list("t_values", raw["t_values"]);
  for (double t : c.t_values) require(t > 0.0, "t_values", "times must be > 0");
  c.sweep_d = parse_list("sweep_d", raw["sweep_d"]);
  for (double x : c.sweep_d) require(x >= 2.0 && x == std::floor(x), "sweep_d", "entries must be integers >= 2");
  c.sweep_p = parse_list("sweep_p", raw["sweep_p"]);
  for (double x : c.sweep_p) require(x > 1.0, "sweep_p", "entries must be > 1");
  c.sweep_alpha = parse_list("sweep_alpha", raw["sweep_alpha"]);
  for (double x : c.sweep_alpha) require(x >= 0.0, "sweep_alpha", "entries must be >= 0");

  // Canonical resolved form: numbers re-formatted so equal configs print identically.
  c.resolved = raw;
  auto canon = [&](const char* k, double v) { c.resolved[k] = format_double(v); };
  canon("d", c.model.d);
  canon("p", c.model.p);
  canon("alpha", c.model.alpha);
  canon("n", c.n);
  canon("nodes", static_cast<double>(c.nodes));
  canon("R_out", c.R_out);
  canon("core_spacing", c.core_spacing);
  canon("R_probe", c.R_probe);
  canon("t_end", c.t_end);
  c.resolved["outputs"] = format_list(c.outputs);
  canon("dt_initial", c.steps.dt_initial);
  canon("dt_growth", c.steps.growth);
  canon("dt_max", c.steps.dt_max);
  c.resolved["linear_mode"] = c.linear_mode ? "true" : "false";
  c.resolved["full_newton"] = c.full_newton ? "true" : "false";
  c.resolved["zeta_min"] = std::isnan(c.zeta_min) ? "auto" : format_double(c.zeta_min);
  c.resolved["zeta_max"] = std::isnan(c.zeta_max) ? "auto" : format_double(c.zeta_max);
  canon("profile_nodes", static_cast<double>(c.profile_nodes));
  canon("tol", c.tol);
  c.resolved["method"] = c.method;
  canon("stationary_tol", c.stationary_tol);
  canon("window_min", c.window_min);
  canon("window_max", c.window_max);
  canon("window_nodes", static_cast<double>(c.window_nodes));
  canon("slack", c.slack);
  canon("metric_target", c.metric_target);
  c.resolved["r_values"] = format_list(c.r_values);
  c.resolved["t_values"] = format_list(c.t_values);
  c.resolved["sweep_d"] = format_list(c.sweep_d);
  c.resolved["sweep_p"] = format_list(c.sweep_p);
  c.resolved["sweep_alpha"] = format_list(c.sweep_alpha);
  return c;
}

}  // namespace selfsim
