#pragma once

// Subcommands behind the `selfsim` executable. Exit codes: 0 success, 1 solver
// failure, 2 configuration error.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "selfsim/config.hpp"
#include "selfsim/csv.hpp"
#include "selfsim/errors.hpp"
#include "selfsim/evolve.hpp"
#include "selfsim/model.hpp"
#include "selfsim/profile.hpp"
#include "selfsim/radial.hpp"
#include "selfsim/specialfn.hpp"
#include "selfsim/stationary.hpp"
#include "selfsim/verify.hpp"

namespace selfsim {

inline constexpr int kExitOk = 0;
inline constexpr int kExitSolver = 1;
inline constexpr int kExitConfig = 2;

inline const std::vector<std::string>& subcommand_names() {
  static const std::vector<std::string> names = {"params", "linear",  "profile",     "evolve",
                                                 "stationary", "verify", "convergence", "sweep"};
  return names;
}

/// One line of a verification report. `relation` is "<=", ">=", "<" or "info".
struct Check {
  std::string name;
  double value = 0.0;
  double threshold = std::numeric_limits<double>::quiet_NaN();
  std::string relation = "info";

  bool pass() const {
    if (relation == "<=") return value <= threshold;
    if (relation == "<") return value < threshold;
    if (relation == ">=") return value >= threshold;
    return true;
  }
  std::string line() const {
    return "name=" + name + " value=" + format_double(value) + " threshold=" + format_double(threshold) +
           " relation=" + relation + " pass=" + (pass() ? "true" : "false");
  }
};

/// Everything produced by one profile + stationary + evolve + verify run.
struct PipelineResult {
  Profile profile;
  StationaryField stationary;
  EvolutionTrace trace;
  SandwichBounds bounds;
  SubsolutionShape elliptic_shape;
  std::vector<SimilarityFrame> frames;
  std::vector<double> metric;
  std::vector<Check> checks;

  bool all_pass() const {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass(); });
  }
  /// All checks except the regression target on the final metric.
  bool structural_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const Check& c) { return c.name == "metric_final" || c.pass(); });
  }
};

inline Profile solve_profile_for(const RunConfig& cfg, std::size_t count) {
  const ZetaGrid zg = cfg.zeta_grid(count);
  if (cfg.method == "variational") return solve_profile_variational(cfg.model, zg, cfg.tol);
  return solve_profile_collocation(cfg.model, zg, cfg.tol);
}

/// Output times whose ζ-window maps into [R, R_out/2].
inline std::vector<double> frame_times(const RunConfig& cfg, const EvolutionTrace& tr) {
  std::vector<double> ts;
  for (double t : tr.times) {
    const double lo = std::sqrt(t) * std::exp(cfg.window_min);
    const double hi = std::sqrt(t) * std::exp(cfg.window_max);
    if (lo >= cfg.R_probe && hi <= 0.5 * cfg.R_out) ts.push_back(t);
  }
  return ts;
}

inline PipelineResult run_pipeline(const RunConfig& cfg) {
  if (cfg.linear_mode) throw ConfigError("linear_mode", "the verification pipeline needs the nonlinear evolution");
  PipelineResult res;
  const ModelParams& m = cfg.model;
  res.profile = solve_profile_for(cfg, cfg.profile_nodes);
  const RadialGrid grid = cfg.radial_grid();
  const Mollifier moll(cfg.n, m.d);
  res.stationary = solve_stationary(m, grid, moll, cfg.stationary_tol);
  res.trace = evolve(m, grid, moll, cfg.t_end, cfg.steps, cfg.evolve_options());
  res.bounds = make_sandwich_bounds(res.trace, res.stationary, res.profile);

  const double R = cfg.R_probe;
  const double vR = res.stationary.at(R);
  res.elliptic_shape = choose_subsolution_params(R, vR, m);

  const auto ts = frame_times(cfg, res.trace);
  if (ts.empty())
    throw ConfigError("outputs", "no output time maps the window [window_min, window_max] into [R_probe, R_out/2]");
  const auto zw = zeta_window(cfg.window_min, cfg.window_max, cfg.window_nodes);
  for (double t : ts) res.frames.push_back(similarity_frame(res.trace, res.stationary, t, zw, R));
  res.metric = convergence_metric(res.frames, res.profile);

  double upper_excess = -std::numeric_limits<double>::infinity();
  double lower_excess = -std::numeric_limits<double>::infinity();
  for (const auto& fr : res.frames)
    for (std::size_t i = 0; i < fr.zeta_nodes.size(); ++i) {
      upper_excess = std::max(upper_excess, fr.F_values[i] - res.bounds.upper(fr.zeta_nodes[i], fr.t));
      lower_excess = std::max(lower_excess, res.bounds.lower(fr.zeta_nodes[i], fr.t) - fr.F_values[i]);
    }

  // Eventually decreasing: no increase over frames in the last decade of time.
  double worst_increase = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k + 1 < res.frames.size(); ++k)
    if (res.frames[k].t >= 0.1 * res.frames.back().t)
      worst_increase = std::max(worst_increase, res.metric[k + 1] - res.metric[k]);
  if (res.frames.size() < 2) worst_increase = 0.0;

  std::size_t sandwich_violations = 0;
  std::vector<double> rr, w0;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double r = grid.r[i];
    rr.push_back(r);
    w0.push_back(subsolution_v0(r, m, res.elliptic_shape));
    // The Dirichlet cut at R_out pulls v below v_0 from about 0.35 R_out outward (p = 4);
    // R_out/8 keeps the audit clear of it for every swept exponent.
    if (r < R || r > 0.125 * cfg.R_out) continue;
    const double v = res.stationary.values[i];
    if (!(w0.back() < v && v < v_infinity(r, m))) ++sandwich_violations;
  }
  const double M0 = residual_M(rr, w0, m, R, 0.5 * cfg.R_out).max();

  const auto& tr = res.trace;
  auto& c = res.checks;
  c.push_back({"profile_residual", res.profile.max_residual(), 1e-8, "<="});
  c.push_back({"stationary_residual", res.stationary.residual, cfg.stationary_tol, "<="});
  c.push_back({"flux_defect", tr.max_flux_defect, 1e-6, "<="});
  c.push_back({"min_increment", tr.min_increment, -1e-10, ">="});
  c.push_back({"min_value", tr.min_value, 0.0, ">="});
  c.push_back({"max_value_minus_ubar", tr.max_value - tr.ubar, 0.0, "<="});
  c.push_back({"stationary_sandwich_violations", static_cast<double>(sandwich_violations), 0.0, "<="});
  c.push_back({"M_v0_max", M0, 1e-8, "<="});
  c.push_back({"sandwich_upper_excess", upper_excess, cfg.slack, "<="});
  c.push_back({"sandwich_lower_excess", lower_excess, cfg.slack, "<="});
  c.push_back({"metric_increase_last_decade", worst_increase, 0.0, "<="});
  c.push_back({"metric_final", res.metric.back(), cfg.metric_target, "<"});
  c.push_back({"T1", res.bounds.T1});
  c.push_back({"T2", res.bounds.T2});
  c.push_back({"gamma_parabolic", res.bounds.shape.gamma});
  c.push_back({"b_parabolic", res.bounds.shape.b});
  c.push_back({"gamma_elliptic", res.elliptic_shape.gamma});
  c.push_back({"v_at_R", vR});
  c.push_back({"fitted_C_d", linear_upper_bound_check(tr, 1.0).fitted_C_d});
  return res;
}

namespace detail {

inline std::string join_path(const std::string& dir, const std::string& file) {
  return (std::filesystem::path(dir) / file).string();
}

inline void write_metric_csv(const std::string& path, const RunConfig& cfg, const PipelineResult& res) {
  CsvWriter w(path, cfg.summary(), {"t", "metric"});
  for (std::size_t k = 0; k < res.frames.size(); ++k) w.row({res.frames[k].t, res.metric[k]});
  w.close();
}

inline void write_report(const std::string& path, const RunConfig& cfg, const PipelineResult& res, std::ostream& out) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << "# config: " << cfg.summary() << '\n';
  for (const auto& c : res.checks) {
    f << c.line() << '\n';
    out << c.line() << '\n';
  }
  if (!f) throw SolverError("cli", "failed writing '" + path + "'");
}

inline void write_profile_csv(const std::string& path, const RunConfig& cfg, const Profile& pr) {
  CsvWriter w(path, cfg.summary(), {"zeta", "phi", "dphi", "residual", "log_tail"});
  for (std::size_t i = 0; i < pr.values.size(); ++i) {
    const double z = pr.grid.nodes[i];
    w.row({z, pr.values[i], pr.derivative[i], pr.residual[i], tail_asymptote(z, pr.params)});
  }
  w.close();
}

inline void write_stationary_csv(const std::string& path, const RunConfig& cfg, const StationaryField& s,
                                 const SubsolutionShape& shape) {
  CsvWriter w(path, cfg.summary(), {"r", "v", "v0", "vinf"});
  const double inf = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < s.grid.size(); ++i) {
    const double r = s.grid.r[i];
    w.row({r, s.values[i], r > 0.0 ? subsolution_v0(r, s.params, shape) : inf,
           r > 0.0 ? v_infinity(r, s.params) : inf});
  }
  w.close();
}

inline void write_trace_csv(const std::string& path, const RunConfig& cfg, const EvolutionTrace& tr) {
  CsvWriter w(path, cfg.summary(), {"t", "u_at_R"});
  for (std::size_t k = 0; k < tr.trace_times.size(); ++k) w.row({tr.trace_times[k], tr.boundary_trace[k]});
  w.close();
}

inline int cmd_params(const RunConfig& cfg, std::ostream& out) {
  const ModelParams& m = cfg.model;
  const auto g = gamma_thresholds(m.p, m.d);
  auto kv = [&](const char* k, double v) { out << k << '=' << format_double(v) << '\n'; };
  kv("d", m.d);
  kv("p", m.p);
  kv("alpha", m.alpha);
  kv("p_star", serrin_exponent(m.d));
  kv("c", singular_amplitude_c(m.p, m.d));
  kv("gamma1", g.gamma1);
  kv("gamma2", g.gamma2);
  kv("gamma_bar", g.gamma_bar);
  kv("s_at_1", s_polynomial(1.0, m.p, m.d));
  kv("K", k_coefficient(m.d));
  kv("energy_prefactor", energy_prefactor(m.p, m.d));
  kv("reaction_B", reaction_coefficient(m));
  kv("drift_limit", ode_coefficients(-std::numeric_limits<double>::infinity(), m).drift);
  kv("weight_exponent", weight_exponent(m));
  kv("tail_exponent", tail_exponent(m));
  kv("rho_0", weight_rho(0.0, m));
  kv("sphere_area", sphere_area(m.d));
  return kExitOk;
}

inline int cmd_linear(const RunConfig& cfg, const std::string& dir, std::ostream& out) {
  const ModelParams& m = cfg.model;
  const std::string path = join_path(dir, "linear.csv");
  CsvWriter w(path, cfg.summary(), {"r", "t", "I", "inner", "outer"});
  for (double r : cfg.r_values)
    for (double t : cfg.t_values)
      w.row({r, t, linear_solution_I(r, t, m.d, m.alpha), m.alpha * linear_asymptote_I(r, t, m.d, AsymptoteBranch::inner),
             m.alpha * linear_asymptote_I(r, t, m.d, AsymptoteBranch::outer)});
  w.close();
  out << "wrote " << path << '\n';
  return kExitOk;
}

inline int cmd_profile(const RunConfig& cfg, const std::string& dir, std::ostream& out) {
  const std::size_t count = cfg.profile_nodes_set ? cfg.profile_nodes : (cfg.nodes_set ? cfg.nodes : cfg.profile_nodes);
  const ZetaGrid zg = cfg.zeta_grid(count);
  Profile pr;
  if (cfg.method == "both") {
    pr = solve_profile_collocation(cfg.model, zg, cfg.tol);
    const Profile var = solve_profile_variational(cfg.model, zg, cfg.tol);
    double dist = 0.0;
    for (std::size_t i = 0; i < pr.values.size(); ++i)
      if (zg.nodes[i] >= -6.0 && zg.nodes[i] <= 2.0) dist = std::max(dist, std::fabs(pr.values[i] - var.values[i]));
    out << "method_distance=" << format_double(dist) << '\n';
  } else {
    pr = solve_profile_for(cfg, count);
  }
  const std::string path = join_path(dir, "profile.csv");
  write_profile_csv(path, cfg, pr);
  const auto pc = plateau_constants(pr);
  out << "residual=" << format_double(pr.max_residual()) << '\n'
      << "iterations=" << pr.iterations << '\n'
      << "zeta0=" << format_double(pc.zeta0) << '\n'
      << "k1=" << format_double(pc.k1) << '\n'
      << "k2=" << format_double(pc.k2) << '\n'
      << "tail_log_constant=" << format_double(pr.tail_log_constant()) << '\n'
      << "wrote " << path << '\n';
  return kExitOk;
}

inline int cmd_evolve(const RunConfig& cfg, const std::string& dir, std::ostream& out) {
  const RadialGrid grid = cfg.radial_grid();
  const Mollifier moll(cfg.n, cfg.model.d);
  const EvolutionTrace tr = evolve(cfg.model, grid, moll, cfg.t_end, cfg.steps, cfg.evolve_options());
  const std::string snap = join_path(dir, "evolve_snapshots.csv");
  {
    CsvWriter w(snap, cfg.summary(), {"t", "r", "u"});
    for (std::size_t k = 0; k < tr.times.size(); ++k)
      for (std::size_t i = 0; i < grid.size(); ++i) w.row({tr.times[k], grid.r[i], tr.fields[k][i]});
    w.close();
  }
  const std::string trace = join_path(dir, "evolve_trace.csv");
  write_trace_csv(trace, cfg, tr);
  out << "steps=" << tr.steps << '\n'
      << "newton_fallbacks=" << tr.newton_fallbacks << '\n'
      << "flux_defect=" << format_double(tr.max_flux_defect) << '\n'
      << "min_increment=" << format_double(tr.min_increment) << '\n'
      << "ubar=" << format_double(tr.ubar) << '\n'
      << "wrote " << snap << '\n'
      << "wrote " << trace << '\n';
  return kExitOk;
}

inline int cmd_stationary(const RunConfig& cfg, const std::string& dir, std::ostream& out) {
  const RadialGrid grid = cfg.radial_grid();
  const Mollifier moll(cfg.n, cfg.model.d);
  const StationaryField s = solve_stationary(cfg.model, grid, moll, cfg.stationary_tol);
  const double vR = s.at(cfg.R_probe);
  SubsolutionShape shape{gamma_thresholds(cfg.model.p, cfg.model.d).gamma_bar, 0.0};
  if (vR > 0.0) shape = choose_subsolution_params(cfg.R_probe, vR, cfg.model);
  const std::string path = join_path(dir, "stationary.csv");
  write_stationary_csv(path, cfg, s, shape);
  out << "residual=" << format_double(s.residual) << '\n'
      << "iterations=" << s.iterations << '\n'
      << "continuation=" << (s.continuation ? "true" : "false") << '\n'
      << "v_at_R=" << format_double(vR) << '\n'
      << "gamma=" << format_double(shape.gamma) << '\n'
      << "b=" << format_double(shape.b) << '\n'
      << "fitted_C=" << format_double(s.fitted_C) << '\n'
      << "wrote " << path << '\n';
  return kExitOk;
}

inline int cmd_verify(const RunConfig& cfg, const std::string& dir, std::ostream& out) {
  const PipelineResult res = run_pipeline(cfg);
  write_report(join_path(dir, "verify_report.txt"), cfg, res, out);
  write_metric_csv(join_path(dir, "verify_metric.csv"), cfg, res);
  return kExitOk;
}

inline int cmd_convergence(const RunConfig& cfg, const std::string& dir, std::ostream& out) {
  const PipelineResult res = run_pipeline(cfg);
  write_profile_csv(join_path(dir, "profile.csv"), cfg, res.profile);
  write_stationary_csv(join_path(dir, "stationary.csv"), cfg, res.stationary, res.elliptic_shape);
  write_trace_csv(join_path(dir, "evolve_trace.csv"), cfg, res.trace);
  write_metric_csv(join_path(dir, "convergence.csv"), cfg, res);
  write_report(join_path(dir, "convergence_report.txt"), cfg, res, out);
  return kExitOk;
}

// Cases run one after another; each writes its own metric file and the summary is
// written once at the end.
inline int cmd_sweep(const RunConfig& cfg, const std::string& dir, std::ostream& out) {
  std::vector<std::vector<std::string>> rows;
  std::size_t idx = 0;
  for (double d : cfg.sweep_d)
    for (double p : cfg.sweep_p)
      for (double a : cfg.sweep_alpha) {
        ConfigMap over = cfg.resolved;
        over["d"] = format_double(d);
        over["p"] = format_double(p);
        over["alpha"] = format_double(a);
        const std::string tag = "sweep_case_" + std::to_string(idx++) + ".csv";
        std::vector<std::string> row = {format_double(d), format_double(p), format_double(a)};
        try {
          const RunConfig c = parse_config(over);
          const PipelineResult res = run_pipeline(c);
          write_metric_csv(join_path(dir, tag), c, res);
          std::size_t failed = 0;
          for (const auto& ch : res.checks)
            if (!ch.pass() && ch.name != "metric_final") ++failed;
          for (double v : {res.profile.max_residual(), res.stationary.residual, res.bounds.T1, res.bounds.T2,
                           res.bounds.shape.gamma, res.bounds.shape.b, res.metric.back()})
            row.push_back(format_double(v));
          row.push_back(std::to_string(failed));
          row.push_back(res.structural_pass() ? "1" : "0");
          row.push_back("ok");
        } catch (const ConfigError& e) {
          row.resize(3, "");
          for (int k = 0; k < 7; ++k) row.push_back("nan");
          row.insert(row.end(), {"0", "0", "config_error"});
          out << "case d=" << row[0] << " p=" << row[1] << " alpha=" << row[2] << ": " << e.what() << '\n';
        } catch (const std::exception& e) {
          row.resize(3, "");
          for (int k = 0; k < 7; ++k) row.push_back("nan");
          row.insert(row.end(), {"0", "0", "solver_error"});
          out << "case d=" << row[0] << " p=" << row[1] << " alpha=" << row[2] << ": " << e.what() << '\n';
        }
        rows.push_back(std::move(row));
      }
  const std::string path = join_path(dir, "sweep_summary.csv");
  CsvWriter w(path, cfg.summary(),
              {"d", "p", "alpha", "profile_residual", "stationary_residual", "T1", "T2", "gamma", "b", "metric_final",
               "checks_failed", "pass", "status"});
  for (const auto& r : rows) w.text_row(r);
  w.close();
  out << "cases=" << rows.size() << '\n' << "wrote " << path << '\n';
  return kExitOk;
}

}  // namespace detail

/// Output directory: SELFSIM_OUT if set, else the working directory.
inline std::string default_output_dir() {
  const char* env = std::getenv("SELFSIM_OUT");
  return (env && *env) ? std::string(env) : std::string(".");
}

/// Runs one subcommand and maps failures onto the exit-code contract.
inline int run_subcommand(const std::string& name, const RunConfig& cfg, const std::string& out_dir,
                          std::ostream& out, std::ostream& err) {
  try {
    std::filesystem::create_directories(out_dir);
    if (name == "params") return detail::cmd_params(cfg, out);
    if (name == "linear") return detail::cmd_linear(cfg, out_dir, out);
    if (name == "profile") return detail::cmd_profile(cfg, out_dir, out);
    if (name == "evolve") return detail::cmd_evolve(cfg, out_dir, out);
    if (name == "stationary") return detail::cmd_stationary(cfg, out_dir, out);
    if (name == "verify") return detail::cmd_verify(cfg, out_dir, out);
    if (name == "convergence") return detail::cmd_convergence(cfg, out_dir, out);
    if (name == "sweep") return detail::cmd_sweep(cfg, out_dir, out);
    err << "error: unknown subcommand '" << name << "'\n";
    return kExitConfig;
  } catch (const ConfigError& e) {
    err << "config error [" << e.key() << "]: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const SolverError& e) {
    err << "solver error [" << e.module() << "]: " << e.what() << '\n';
    return kExitSolver;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitSolver;
  }
}

}  // namespace selfsim
