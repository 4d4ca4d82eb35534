#pragma once

// Comparison machinery on the exterior region r ≥ R:
//   M[W] = −W_rr − ((d−1)/r) W_r + W^p,   N[w] = w_t + M[w],
// the time-shifted super-solution v_∞ φ(ln(r/√(t+T₁))), the delayed sub-solution
// v_0 φ(ln((r + b r^γ)/√(t−T₂))), the similarity frame F = u/v_α, the convergence
// metric sup|F − φ| and a weak-form residual with smooth space-time test functions.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/evolve.hpp"
#include "selfsim/model.hpp"
#include "selfsim/numerics.hpp"
#include "selfsim/profile.hpp"
#include "selfsim/radial.hpp"
#include "selfsim/stationary.hpp"

namespace selfsim {

struct RadialResidual {
  std::vector<double> r;
  std::vector<double> value;

  double max() const {
    double s = -std::numeric_limits<double>::infinity();
    for (double v : value) s = std::max(s, v);
    return s;
  }
  double max_abs() const {
    double s = 0.0;
    for (double v : value) s = std::max(s, std::fabs(v));
    return s;
  }
};

namespace detail {

// Three-point first and second derivatives on a non-uniform stencil.
struct Stencil3 {
  double d1 = 0.0;
  double d2 = 0.0;
};

inline Stencil3 stencil3(double xm, double x0, double xp, double fm, double f0, double fp) {
  const double hm = x0 - xm;
  const double hp = xp - x0;
  const double den = hm * hp * (hm + hp);
  return {(hm * hm * fp - hp * hp * fm + (hp * hp - hm * hm) * f0) / den,
          2.0 * (hm * fp - (hm + hp) * f0 + hp * fm) / den};
}

inline double elliptic_part(double r, int d, double p, const Stencil3& s, double w) {
  return -s.d2 - (d - 1.0) / r * s.d1 + signed_pow(w, p);
}

}  // namespace detail

/// M[W] at interior nodes with r_lo ≤ r ≤ r_hi.
inline RadialResidual residual_M(std::span<const double> r, std::span<const double> W, const ModelParams& m,
                                 double r_lo, double r_hi) {
  if (r.size() != W.size() || r.size() < 5) throw DomainError("residual_M: need >= 5 matching samples");
  RadialResidual out;
  for (std::size_t i = 1; i + 1 < r.size(); ++i) {
    if (r[i] < r_lo || r[i] > r_hi || !(r[i] > 0.0)) continue;
    const auto s = detail::stencil3(r[i - 1], r[i], r[i + 1], W[i - 1], W[i], W[i + 1]);
    out.r.push_back(r[i]);
    out.value.push_back(detail::elliptic_part(r[i], m.d, m.p, s, W[i]));
  }
  return out;
}

/// Samples w(r_i, t_j) on a space-time lattice; rows are times.
struct SpaceTimeSamples {
  std::vector<double> r;
  std::vector<double> t;
  std::vector<std::vector<double>> values;
};

inline SpaceTimeSamples sample_space_time(const std::function<double(double, double)>& w, std::vector<double> r,
                                          std::vector<double> t) {
  SpaceTimeSamples s{std::move(r), std::move(t), {}};
  s.values.resize(s.t.size());
  for (std::size_t j = 0; j < s.t.size(); ++j) {
    s.values[j].resize(s.r.size());
    for (std::size_t i = 0; i < s.r.size(); ++i) s.values[j][i] = w(s.r[i], s.t[j]);
  }
  return s;
}

struct SpaceTimeResidual {
  std::vector<double> r;  ///< interior radii
  std::vector<double> t;  ///< interior times
  std::vector<std::vector<double>> values;

  double max() const {
    double s = -std::numeric_limits<double>::infinity();
    for (const auto& row : values)
      for (double v : row) s = std::max(s, v);
    return s;
  }
  double max_abs() const {
    double s = 0.0;
    for (const auto& row : values)
      for (double v : row) s = std::max(s, std::fabs(v));
    return s;
  }
};

/// N[w] = w_t − w_rr − ((d−1)/r) w_r + w^p at interior lattice nodes, centered in r and t.
inline SpaceTimeResidual residual_N(const SpaceTimeSamples& w, const ModelParams& m) {
  const std::size_t nr = w.r.size(), nt = w.t.size();
  if (nr < 3 || nt < 3) throw DomainError("residual_N: need at least 3 samples in r and in t");
  SpaceTimeResidual out;
  out.r.assign(w.r.begin() + 1, w.r.end() - 1);
  out.t.assign(w.t.begin() + 1, w.t.end() - 1);
  out.values.assign(nt - 2, std::vector<double>(nr - 2, 0.0));
  for (std::size_t j = 1; j + 1 < nt; ++j) {
    for (std::size_t i = 1; i + 1 < nr; ++i) {
      const auto st = detail::stencil3(w.t[j - 1], w.t[j], w.t[j + 1], w.values[j - 1][i], w.values[j][i],
                                       w.values[j + 1][i]);
      const auto sr = detail::stencil3(w.r[i - 1], w.r[i], w.r[i + 1], w.values[j][i - 1], w.values[j][i],
                                       w.values[j][i + 1]);
      out.values[j - 1][i - 1] = st.d1 + detail::elliptic_part(w.r[i], m.d, m.p, sr, w.values[j][i]);
    }
  }
  return out;
}

/// Smallest T₁ on the scan 10^{−3}·1.25^k with v_∞(R) φ(ln(R/√(t+T₁))) > u(R,t) at every
/// recorded time, returned with a 10% margin.
inline double choose_T1(std::span<const double> times, std::span<const double> trace, double R, const ModelParams& m,
                        const Profile& profile) {
  if (times.size() != trace.size() || times.empty()) throw DomainError("choose_T1: trace is empty or mismatched");
  const double vinf = v_infinity(R, m);
  for (double u : trace)
    if (!(u < vinf)) throw SolverError("verify", "choose_T1: boundary trace reaches v_infinity(R)");
  auto works = [&](double T1) {
    for (std::size_t k = 0; k < times.size(); ++k)
      if (!(vinf * profile.value_at(std::log(R / std::sqrt(times[k] + T1))) > trace[k])) return false;
    return true;
  };
  double T1 = 1e-3;
  for (int k = 0; k < 400; ++k, T1 *= 1.25)
    if (works(T1)) return 1.1 * T1;
  throw SolverError("verify", "choose_T1: scan exhausted (profile and trace inconsistent)");
}

/// First recorded time with u(R,t) > 2 v(R)/3.
inline double choose_T2(std::span<const double> times, std::span<const double> trace, double v_at_R) {
  if (times.size() != trace.size()) throw DomainError("choose_T2: trace is mismatched");
  for (std::size_t k = 0; k < times.size(); ++k)
    if (trace[k] > 2.0 * v_at_R / 3.0) return times[k];
  throw SolverError("verify", "choose_T2: trace never exceeds 2 v(R)/3");
}

/// Sub- and super-solutions of the exterior problem and the bounds they imply for F.
struct SandwichBounds {
  ModelParams params;
  Profile profile;
  MonotoneCubic v_alpha;
  double T1 = 0.0;
  double T2 = 0.0;
  SubsolutionShape shape;

  /// v_∞(r) φ(ln(r/√(t+T₁))).
  double super_solution(double r, double t) const {
    return v_infinity(r, params) * profile.value_at(std::log(r / std::sqrt(t + T1)));
  }

  /// 0 for t ≤ T₂, v_0(r) φ(ln((r + b r^γ)/√(t − T₂))) after.
  double sub_solution(double r, double t) const {
    if (t <= T2) return 0.0;
    const double z = std::log((r + shape.b * std::pow(r, shape.gamma)) / std::sqrt(t - T2));
    return subsolution_v0(r, params, shape) * profile.value_at(z);
  }

  /// (v_∞/v_α) φ(ζ − ½ ln(1 + T₁/t)).
  double upper(double zeta, double t) const {
    const double r = std::sqrt(t) * std::exp(zeta);
    return v_infinity(r, params) / v_alpha(r) * profile.value_at(zeta - 0.5 * std::log1p(T1 / t));
  }

  /// (v_0/v_α) φ(ζ + ln((1 + b e^{−(1−γ)ζ}/t^{(1−γ)/2}) / √(1 − T₂/t))); 0 for t ≤ T₂.
  double lower(double zeta, double t) const {
    if (t <= T2) return 0.0;
    const double r = std::sqrt(t) * std::exp(zeta);
    const double dl = 1.0 - shape.gamma;
    const double shift =
        std::log((1.0 + shape.b * std::exp(-dl * zeta) / std::pow(t, 0.5 * dl)) / std::sqrt(1.0 - T2 / t));
    return subsolution_v0(r, params, shape) / v_alpha(r) * profile.value_at(zeta + shift);
  }

  /// v_0/v_∞ = 1/(1 + b e^{−(1−γ)ζ}/t^{(1−γ)/2}), the prefactor ratio at fixed ζ.
  double H(double zeta, double t) const {
    const double dl = 1.0 - shape.gamma;
    return 1.0 / (1.0 + shape.b * std::exp(-dl * zeta) / std::pow(t, 0.5 * dl));
  }
};

/// Assembles the bounds from a trace, the stationary solution and the profile.
inline SandwichBounds make_sandwich_bounds(const EvolutionTrace& tr, const StationaryField& v, const Profile& profile) {
  SandwichBounds sb;
  sb.params = tr.params;
  sb.profile = profile;
  sb.v_alpha = MonotoneCubic(v.grid.r, v.values);
  const double R = tr.probe_radius;
  const double vR = sb.v_alpha(R);
  sb.T1 = choose_T1(tr.trace_times, tr.boundary_trace, R, tr.params, profile);
  sb.T2 = choose_T2(tr.trace_times, tr.boundary_trace, vR);
  sb.shape = choose_parabolic_subsolution_params(R, vR, tr.params, plateau_constants(profile));
  return sb;
}

struct SimilarityFrame {
  double t = 0.0;
  std::vector<double> zeta_nodes;
  std::vector<double> F_values;
};

/// F(ζ,t) = u(r,t)/v_α(r) at r = √t e^ζ; the window must map into [R, R_out/2].
inline SimilarityFrame similarity_frame(const EvolutionTrace& tr, const StationaryField& v_alpha, double t,
                                        std::span<const double> zeta_nodes, double R) {
  const auto& u = tr.field_at(t);
  const double r_max = 0.5 * tr.grid.r_out;
  const MonotoneCubic U(tr.grid.r, u);
  const MonotoneCubic V(v_alpha.grid.r, v_alpha.values);
  SimilarityFrame fr;
  fr.t = t;
  fr.zeta_nodes.assign(zeta_nodes.begin(), zeta_nodes.end());
  for (double z : zeta_nodes) {
    const double r = std::sqrt(t) * std::exp(z);
    if (r < R * (1.0 - 1e-12) || r > r_max)
      throw DomainError("similarity_frame: zeta = " + std::to_string(z) + " maps outside [R, R_out/2] at t = " +
                        std::to_string(t));
    fr.F_values.push_back(U(r) / V(r));
  }
  return fr;
}

/// Uniform ζ-window nodes.
inline std::vector<double> zeta_window(double lo, double hi, std::size_t n) {
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(n - 1);
  return z;
}

/// sup over window nodes of |F(ζ,t) − φ(ζ)| per frame.
inline std::vector<double> convergence_metric(std::span<const SimilarityFrame> frames, const Profile& profile) {
  std::vector<double> out;
  for (const auto& fr : frames) {
    double s = 0.0;
    for (std::size_t i = 0; i < fr.zeta_nodes.size(); ++i)
      s = std::max(s, std::fabs(fr.F_values[i] - profile.value_at(fr.zeta_nodes[i])));
    out.push_back(s);
  }
  return out;
}

/// ψ(r,t) = X(r) T(t). X switches on across [a0, a1] (or is 1 from the axis when a1 ≤ 0)
/// and off across [b0, b1]; T(t) = exp(1 − 1/(1 − y²)), y mapping (t0, t1) onto (−1, 1).
struct TestFunction {
  double a0 = 0.0, a1 = 0.0;
  double b0 = 0.5, b1 = 1.0;
  double t0 = 0.0, t1 = 1.0;

  static TestFunction plateau(double r_flat, double r_support, double t0, double t1) {
    return {0.0, 0.0, r_flat, r_support, t0, t1};
  }
  static TestFunction annulus(double a0, double a1, double b0, double b1, double t0, double t1) {
    return {a0, a1, b0, b1, t0, t1};
  }

  bool touches_axis() const { return a1 <= 0.0; }

  Jet radial(double r) const {
    const Jet x = Jet::variable(r);
    Jet on = Jet::constant(1.0);
    if (!touches_axis()) on = smooth_step((1.0 / (a1 - a0)) * (x - Jet::constant(a0)));
    const Jet off = Jet::constant(1.0) - smooth_step((1.0 / (b1 - b0)) * (x - Jet::constant(b0)));
    return on * off;
  }

  /// Value and derivative of the temporal bump.
  Jet temporal(double t) const {
    const double mid = 0.5 * (t0 + t1), half = 0.5 * (t1 - t0);
    const Jet y = (1.0 / half) * (Jet::variable(t) - Jet::constant(mid));
    if (std::fabs(y.f) >= 1.0) return Jet{};
    return exp(Jet::constant(1.0) - reciprocal(Jet::constant(1.0) - y * y));
  }
};

/// ∫∫ u (ψ_t + Δψ − u^{p−1} ψ) dx dt + α ∫ ψ(0,t) dt over the stored snapshots, with
/// the finite-volume cell volumes in r and the trapezoid rule in t. Returns |·|.
inline double weak_form_residual(const EvolutionTrace& tr, const TestFunction& psi, const ModelParams& m) {
  if (psi.b1 > 0.5 * tr.grid.r_out) throw DomainError("weak_form_residual: test function exceeds R_out/2");
  if (tr.times.empty() || psi.t1 > tr.times.back() || psi.t0 < 0.0)
    throw DomainError("weak_form_residual: test function support outside the traced interval");
  const auto& g = tr.grid;
  const std::size_t n = g.size();
  std::vector<double> X(n), LX(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Jet x = psi.radial(g.r[i]);
    X[i] = x.f;
    LX[i] = (i > 0) ? x.d2 + (m.d - 1.0) / g.r[i] * x.d1 : m.d * x.d2;
  }
  const double X0 = psi.radial(0.0).f;

  // Integrand in time, including the t = 0 slice u = 0.
  std::vector<double> ts{0.0}, vals{0.0};
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    const double t = tr.times[k];
    const Jet T = psi.temporal(t);
    const auto& u = tr.fields[k];
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (X[i] == 0.0 && LX[i] == 0.0) continue;
      const double ui = u[i];
      s += g.volume[i] * ui * (X[i] * T.d1 + LX[i] * T.f - std::pow(std::max(ui, 0.0), m.p - 1.0) * X[i] * T.f);
    }
    ts.push_back(t);
    vals.push_back(s + m.alpha * X0 * T.f);
  }
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < ts.size(); ++k) total += 0.5 * (ts[k + 1] - ts[k]) * (vals[k] + vals[k + 1]);
  return std::fabs(total);
}

}  // namespace selfsim
