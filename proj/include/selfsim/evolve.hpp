#pragma once

// Radial time-dependent solver for u_t = Δu − f_n(u) + α g_n with zero initial data,
// symmetry at r = 0 and homogeneous Dirichlet data at R_out.
//
// Backward Euler in diffusion, reaction linearized about the previous step:
//   (1/dt + A + f_n'(u^k)) u^{k+1} = u^k/dt + f_n'(u^k) u^k − f_n(u^k) + α S.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/model.hpp"
#include "selfsim/numerics.hpp"
#include "selfsim/radial.hpp"
#include "selfsim/specialfn.hpp"

namespace selfsim {

struct TimeStepPolicy {
  double dt_initial = 1e-6;
  double growth = 1.05;
  double dt_max = 1e-2;

  void validate() const {
    if (!(dt_initial > 0.0)) throw DomainError("time steps: dt_initial must be > 0");
    if (!(growth >= 1.0)) throw DomainError("time steps: growth factor must be >= 1");
    if (!(dt_max >= dt_initial)) throw DomainError("time steps: dt_max must be >= dt_initial");
  }
};

struct EvolveOptions {
  bool linear_mode = false;
  double probe_radius = 1.0;
  std::vector<double> output_times;  ///< t_end is always appended
  bool full_newton = false;          ///< iterate every step to convergence instead of one linearization
  double monotonicity_tolerance = 1e-10;
  int newton_max_iterations = 30;
};

struct EvolutionTrace {
  RadialGrid grid;
  ModelParams params;
  bool linear_mode = false;
  double ubar = 0.0;
  std::vector<double> times;
  std::vector<std::vector<double>> fields;
  double probe_radius = 1.0;
  std::vector<double> trace_times;
  std::vector<double> boundary_trace;

  // Audits accumulated over all steps.
  int steps = 0;
  int newton_fallbacks = 0;
  double max_flux_defect = 0.0;  ///< relative discrete conservation defect
  double min_increment = 0.0;    ///< min over steps and nodes of u^{k+1} − u^k
  double min_value = 0.0;
  double max_value = 0.0;

  /// Snapshot at an output time (exact match within 1e−12 relative).
  const std::vector<double>& field_at(double t) const {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (std::fabs(times[k] - t) <= 1e-12 * std::max(1.0, std::fabs(t))) return fields[k];
    throw DomainError("evolution trace: no snapshot at t = " + std::to_string(t));
  }

  /// u(probe_radius, t) by linear interpolation of the per-step boundary trace.
  double probe_at(double t) const {
    if (t <= trace_times.front()) return boundary_trace.front();
    if (t >= trace_times.back()) return boundary_trace.back();
    const std::size_t k = bracket_index(trace_times, t);
    const double s = (t - trace_times[k]) / (trace_times[k + 1] - trace_times[k]);
    return (1.0 - s) * boundary_trace[k] + s * boundary_trace[k + 1];
  }
};

namespace detail {

// Thomas sweep for (1/dt + A + diag(react)) x = rhs; the matrix is an M-matrix, so no
// pivoting is needed and non-negative data give a non-negative solution.
struct StepSolver {
  std::vector<double> c, inv_den, x;
  double cached_inv_dt = -1.0;
  bool cached = false;

  void factor(const RadialOperator& A, double inv_dt, std::span<const double> react) {
    const std::size_t n = A.size();
    c.resize(n);
    inv_den.resize(n);
    inv_den[0] = 1.0 / (inv_dt + A.diag[0] + react[0]);
    c[0] = A.upper[0] * inv_den[0];
    for (std::size_t i = 1; i < n; ++i) {
      inv_den[i] = 1.0 / (inv_dt + A.diag[i] + react[i] - A.lower[i] * c[i - 1]);
      c[i] = A.upper[i] * inv_den[i];
    }
  }

  void substitute(const RadialOperator& A, std::span<const double> rhs) {
    const std::size_t n = A.size();
    x.resize(n);
    x[0] = rhs[0] * inv_den[0];
    for (std::size_t i = 1; i < n; ++i) x[i] = (rhs[i] - A.lower[i] * x[i - 1]) * inv_den[i];
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= c[i] * x[i + 1];
  }

  void solve(const RadialOperator& A, double inv_dt, std::span<const double> react, std::span<const double> rhs) {
    factor(A, inv_dt, react);
    cached = false;
    substitute(A, rhs);
  }

  /// Reuses the factorization while dt is unchanged; react must be identically zero.
  void solve_linear(const RadialOperator& A, double inv_dt, std::span<const double> zeros, std::span<const double> rhs) {
    if (!cached || inv_dt != cached_inv_dt) {
      factor(A, inv_dt, zeros);
      cached = true;
      cached_inv_dt = inv_dt;
    }
    substitute(A, rhs);
  }
};

}  // namespace detail

/// Integrate the mollified problem to t_end. Throws SolverError on an invariant breach.
inline EvolutionTrace evolve(const ModelParams& m, const RadialGrid& grid, const Mollifier& moll, double t_end,
                             const TimeStepPolicy& policy, const EvolveOptions& opt = {}) {
  m.validate();
  policy.validate();
  if (grid.d != m.d || moll.d() != m.d) throw DomainError("evolve: grid, mollifier and model dimensions differ");
  if (!(t_end > 0.0)) throw DomainError("evolve: t_end must be > 0");
  if (grid.nodes_below(moll.support_radius()) < 8)
    throw DomainError("evolve: grid must have at least 8 nodes inside the mollifier support [0, 1/n]");
  if (grid.r_out < 6.0 * std::sqrt(t_end)) throw DomainError("evolve: R_out must be >= 6 sqrt(t_end)");
  if (!(opt.probe_radius > 0.0 && opt.probe_radius < grid.r_out))
    throw DomainError("evolve: probe radius must lie inside (0, R_out)");

  const std::size_t nn = grid.size();
  const std::size_t nu = nn - 1;  // last node is Dirichlet
  const RadialOperator A(grid);
  const std::vector<double> source = cell_averaged_source(grid, moll);
  const TruncatedNonlinearity f = make_truncation(m, moll);

  std::vector<double> outputs = opt.output_times;
  outputs.push_back(t_end);
  std::sort(outputs.begin(), outputs.end());
  outputs.erase(std::remove_if(outputs.begin(), outputs.end(), [&](double t) { return !(t > 0.0) || t > t_end; }),
                outputs.end());
  outputs.erase(std::unique(outputs.begin(), outputs.end()), outputs.end());

  EvolutionTrace tr;
  tr.grid = grid;
  tr.params = m;
  tr.linear_mode = opt.linear_mode;
  tr.ubar = f.ubar;
  tr.probe_radius = opt.probe_radius;

  std::vector<double> u(nn, 0.0);
  std::vector<double> react(nu, 0.0), fval(nu, 0.0), rhs(nu);
  detail::StepSolver solver, newton_solver;
  double source_mass = 0.0;
  std::size_t n_src = 0;
  for (std::size_t i = 0; i < nu; ++i) {
    source_mass += grid.volume[i] * m.alpha * source[i];
    if (source[i] > 0.0) n_src = i + 1;
  }
  const double residual_scale = std::max(1.0, m.alpha * *std::max_element(source.begin(), source.end()));

  tr.trace_times.push_back(0.0);
  tr.boundary_trace.push_back(0.0);

  double t = 0.0;
  double dt_nominal = policy.dt_initial;
  std::size_t next_out = 0;
  while (next_out < outputs.size()) {
    double dt = dt_nominal;
    bool hits_output = false;
    const double gap = outputs[next_out] - t;
    if (dt >= gap * (1.0 - 1e-12)) {
      dt = gap;
      hits_output = true;
    } else if (gap - dt < 0.1 * dt) {
      dt = 0.5 * gap;  // split the remainder instead of leaving a sliver step
    }
    const double inv_dt = 1.0 / dt;

    if (opt.linear_mode) {
      for (std::size_t i = 0; i < nu; ++i) rhs[i] = u[i] * inv_dt;
      for (std::size_t i = 0; i < n_src; ++i) rhs[i] += m.alpha * source[i];
      solver.solve_linear(A, inv_dt, react, rhs);
    } else {
      for (std::size_t i = 0; i < nu; ++i) {
        f.evaluate(u[i], fval[i], react[i]);
        rhs[i] = u[i] * inv_dt + react[i] * u[i] - fval[i];
      }
      for (std::size_t i = 0; i < n_src; ++i) rhs[i] += m.alpha * source[i];
      solver.solve(A, inv_dt, react, rhs);
    }
    std::vector<double>& sol = solver.x;

    auto min_increment = [&] {
      double w = std::numeric_limits<double>::infinity();
      for (std::size_t i = 0; i < nu; ++i) w = std::min(w, sol[i] - u[i]);
      return w;
    };

    bool newton = opt.full_newton && !opt.linear_mode;
    if (!opt.linear_mode && !newton && min_increment() < -opt.monotonicity_tolerance) {
      newton = true;
      ++tr.newton_fallbacks;
    }
    if (newton) {
      // G(x) = (x − u)/dt + A x + f_n(x) − α S.
      std::vector<double> g(nu), jr(nu);
      for (int it = 0;; ++it) {
        double gmax = 0.0;
        for (std::size_t i = 0; i < nu; ++i) {
          double fi;
          f.evaluate(sol[i], fi, jr[i]);
          g[i] = (sol[i] - u[i]) * inv_dt + A.apply_row(sol, i) + fi - m.alpha * source[i];
          gmax = std::max(gmax, std::fabs(g[i]));
          g[i] = -g[i];
        }
        if (gmax <= 1e-13 * residual_scale) break;
        if (it == opt.newton_max_iterations)
          throw SolverError("evolve", "Newton step did not converge at t = " + std::to_string(t + dt), tr.steps, gmax);
        newton_solver.solve(A, inv_dt, jr, g);
        for (std::size_t i = 0; i < nu; ++i) sol[i] += newton_solver.x[i];
      }
      for (std::size_t i = 0; i < nu; ++i) {
        react[i] = 0.0;
        fval[i] = f(sol[i]);
      }
    }

    // One pass: conservation audit Σ V (u^{k+1} − u^k)/dt = α Σ V S − Σ V f_lin − κ_{N−3/2} u_{N−2}^{k+1},
    // increment and range checks, then the update itself.
    double storage = 0.0, absorbed = 0.0, inc = std::numeric_limits<double>::infinity();
    double lo = tr.min_value, hi = tr.max_value;
    for (std::size_t i = 0; i < nu; ++i) {
      const double w = sol[i] - u[i];
      storage += grid.volume[i] * w;
      if (!opt.linear_mode) absorbed += grid.volume[i] * (fval[i] + react[i] * w);
      inc = std::min(inc, w);
      lo = std::min(lo, sol[i]);
      hi = std::max(hi, sol[i]);
      u[i] = sol[i];
    }
    storage *= inv_dt;
    const double outflux = grid.conductance[nu - 1] * u[nu - 1];
    const double scale = std::max({std::fabs(storage), source_mass, absorbed, outflux});
    if (scale > 0.0)
      tr.max_flux_defect =
          std::max(tr.max_flux_defect, std::fabs(storage - (source_mass - absorbed - outflux)) / scale);

    ++tr.steps;
    tr.min_increment = std::min(tr.min_increment, inc);
    tr.min_value = lo;
    tr.max_value = hi;
    if (lo < 0.0) throw SolverError("evolve", "negative value at t = " + std::to_string(t + dt), tr.steps, lo);
    if (!opt.linear_mode && hi > f.ubar)
      throw SolverError("evolve", "value above the truncation level at t = " + std::to_string(t + dt), tr.steps, hi);
    if (inc < -opt.monotonicity_tolerance)
      throw SolverError("evolve", "monotonicity in t violated at t = " + std::to_string(t + dt), tr.steps, inc);

    t = hits_output ? outputs[next_out] : t + dt;
    tr.trace_times.push_back(t);
    tr.boundary_trace.push_back(interpolate_local(grid.r, u, opt.probe_radius));
    if (hits_output) {
      tr.times.push_back(t);
      tr.fields.push_back(u);
      ++next_out;
    }
    dt_nominal = std::min(dt_nominal * policy.growth, policy.dt_max);
  }
  return tr;
}

struct LinearBoundReport {
  double C_d = 0.0;
  std::size_t violations = 0;
  std::size_t checked = 0;
  double fitted_C_d = 0.0;  ///< smallest constant for which the bound holds on the trace
};

/// Checks u(r,t) ≤ α C_d I(r, 1+2t) at every stored snapshot and interior node.
inline LinearBoundReport linear_upper_bound_check(const EvolutionTrace& tr, double C_d) {
  LinearBoundReport rep;
  rep.C_d = C_d;
  const double alpha = tr.params.alpha;
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double t = tr.times[k];
    const auto& u = tr.fields[k];
    const double axis = linear_solution_I(tr.grid.r[1], 1.0 + 2.0 * t, tr.params.d, alpha);
    for (std::size_t i = 1; i + 1 < u.size(); ++i) {
      const double bound = linear_solution_I(tr.grid.r[i], 1.0 + 2.0 * t, tr.params.d, alpha);
      ++rep.checked;
      if (u[i] > C_d * bound) ++rep.violations;
      // The implicit scheme's far tail decays exponentially, the bound like a Gaussian;
      // their ratio there says nothing about C_d.
      if (bound >= 1e-12 * axis) rep.fitted_C_d = std::max(rep.fitted_C_d, u[i] / bound);
    }
  }
  return rep;
}

}  // namespace selfsim
