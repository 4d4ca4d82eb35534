#pragma once

// Mollified stationary problem −Δv + f_n(v) = α g_n on [0, R_out] with v(R_out) = 0,
// and the parameter choices for the sub-solutions v_0(r) = c/(r + b r^γ)^{2/(p−1)}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/model.hpp"
#include "selfsim/numerics.hpp"
#include "selfsim/profile.hpp"
#include "selfsim/radial.hpp"

namespace selfsim {

struct StationaryField {
  RadialGrid grid;
  ModelParams params;
  std::vector<double> values;  ///< v(r_i), last node is the Dirichlet zero
  double residual = 0.0;       ///< max row-scaled residual
  int iterations = 0;
  bool continuation = false;   ///< pseudo-transient fallback was needed
  double fitted_C = 0.0;       ///< max_r v(r) r^{2/(p−1)}

  double at(double r) const { return MonotoneCubic(grid.r, values)(r); }
};

namespace detail {

struct StationaryResidual {
  std::vector<double> F;
  double scaled = 0.0;
};

inline StationaryResidual stationary_residual(const RadialOperator& A, const TruncatedNonlinearity& f,
                                              std::span<const double> src, double alpha, std::span<const double> v) {
  StationaryResidual res;
  const std::size_t m = A.size();
  res.F.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double fi = f(v[i]);
    const double s = alpha * src[i];
    res.F[i] = A.apply_row(v, i) + fi - s;
    double scale = std::fabs(A.diag[i] * v[i]) + fi + s;
    if (i > 0) scale += std::fabs(A.lower[i] * v[i - 1]);
    if (i + 1 < m) scale += std::fabs(A.upper[i] * v[i + 1]);
    if (scale > 0.0) res.scaled = std::max(res.scaled, std::fabs(res.F[i]) / scale);
  }
  return res;
}

inline std::vector<double> stationary_newton_step(const RadialOperator& A, const TruncatedNonlinearity& f,
                                                  std::span<const double> v, std::span<const double> F,
                                                  double shift) {
  const std::size_t m = A.size();
  Tridiagonal J(m);
  std::vector<double> rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    J.lower[i] = A.lower[i];
    J.diag[i] = A.diag[i] + f.derivative(v[i]) + shift;
    J.upper[i] = A.upper[i];
    rhs[i] = -F[i];
  }
  return solve_tridiagonal(std::move(J), std::move(rhs));
}

inline double weighted_norm(std::span<const double> F, std::span<const double> vol) {
  double s = 0.0;
  for (std::size_t i = 0; i < F.size(); ++i) s += vol[i] * F[i] * F[i];
  return std::sqrt(s);
}

}  // namespace detail

/// First violated StationaryField invariant, if any.
inline std::optional<std::string> stationary_invariant_violation(const StationaryField& s) {
  const auto& v = s.values;
  if (s.params.alpha == 0.0) return std::nullopt;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (!(v[i] > 0.0)) return "v not positive at node " + std::to_string(i);
    if (!(v[i + 1] < v[i])) return "v not decreasing at node " + std::to_string(i);
    if (i > 0 && !(v[i] <= v_infinity(s.grid.r[i], s.params)))
      return "v above v_infinity at node " + std::to_string(i);
  }
  return std::nullopt;
}

/// Damped Newton from v = 0 with pseudo-transient continuation as fallback.
inline StationaryField solve_stationary(const ModelParams& m, const RadialGrid& grid, const Mollifier& moll,
                                        double tol = 1e-12, int max_iterations = 200) {
  m.validate();
  if (grid.d != m.d || moll.d() != m.d) throw DomainError("stationary: grid, mollifier and model dimensions differ");
  const RadialOperator A(grid);
  const std::vector<double> src = cell_averaged_source(grid, moll);
  const TruncatedNonlinearity f = make_truncation(m, moll);
  const std::size_t nu = A.size();
  std::vector<double> vol(grid.volume.begin(), grid.volume.begin() + static_cast<std::ptrdiff_t>(nu));

  StationaryField out;
  out.grid = grid;
  out.params = m;
  std::vector<double> v(grid.size(), 0.0);
  auto res = detail::stationary_residual(A, f, src, m.alpha, v);
  int iter = 0;
  bool newton_ok = true;
  for (; iter < max_iterations && res.scaled > tol; ++iter) {
    const std::vector<double> dv = detail::stationary_newton_step(A, f, v, res.F, 0.0);
    const double f0 = detail::weighted_norm(res.F, vol);
    double lambda = 1.0;
    bool accepted = false;
    std::vector<double> trial = v;
    for (int h = 0; h <= 30; ++h, lambda *= 0.5) {
      for (std::size_t i = 0; i < nu; ++i) trial[i] = v[i] + lambda * dv[i];
      auto rt = detail::stationary_residual(A, f, src, m.alpha, trial);
      // The volume-weighted norm bottoms out at round-off on wide grids while the row-scaled
      // residual still converges quadratically, so a decrease in either is accepted.
      if (detail::weighted_norm(rt.F, vol) <= (1.0 - 1e-4 * lambda) * f0 ||
          rt.scaled <= (1.0 - 1e-4 * lambda) * res.scaled || rt.scaled <= tol) {
        v.swap(trial);
        res = std::move(rt);
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      newton_ok = false;
      break;
    }
  }

  if (!newton_ok || res.scaled > tol) {
    // Pseudo-transient continuation with switched-evolution-relaxation of the pseudo step.
    out.continuation = true;
    std::fill(v.begin(), v.end(), 0.0);
    res = detail::stationary_residual(A, f, src, m.alpha, v);
    double tau = 1e-6;
    double prev = detail::weighted_norm(res.F, vol);
    for (iter = 0; iter < 50 * max_iterations && res.scaled > tol; ++iter) {
      const std::vector<double> dv = detail::stationary_newton_step(A, f, v, res.F, 1.0 / tau);
      for (std::size_t i = 0; i < nu; ++i) v[i] = std::max(v[i] + dv[i], 0.0);
      res = detail::stationary_residual(A, f, src, m.alpha, v);
      const double now = detail::weighted_norm(res.F, vol);
      tau = std::min(tau * prev / std::max(now, 1e-300), 1e12);
      prev = now;
    }
    if (res.scaled > tol) throw SolverError("stationary", "Newton and continuation did not converge", iter, res.scaled);
  }

  out.values = v;
  out.values.back() = 0.0;
  out.residual = res.scaled;
  out.iterations = iter;
  const double q = 2.0 / (m.p - 1.0);
  for (std::size_t i = 1; i + 1 < grid.size(); ++i)
    out.fitted_C = std::max(out.fitted_C, v[i] * std::pow(grid.r[i], q));
  if (auto bad = stationary_invariant_violation(out)) throw SolverError("stationary", "invariant breach: " + *bad);
  return out;
}

/// b with v_0(R) = v_at_R / 2 for a given γ.
inline double subsolution_b(double R, double v_at_R, const ModelParams& m, double gamma) {
  const double c = singular_amplitude_c(m.p, m.d);
  return std::pow(R, -gamma) * (std::pow(2.0 * c / v_at_R, 0.5 * (m.p - 1.0)) - R);
}

namespace detail {
inline void require_below_vinf(double R, double v_at_R, const ModelParams& m, const char* who) {
  if (!(R > 0.0)) throw DomainError(std::string(who) + ": R must be > 0");
  if (!(v_at_R > 0.0)) throw DomainError(std::string(who) + ": v(R) must be > 0");
  if (!(v_at_R < v_infinity(R, m)))
    throw DomainError(std::string(who) + ": infeasible, v(R) must lie below v_infinity(R)");
}
}  // namespace detail

/// Elliptic sub-solution: γ = γ̄(p,d) and b from v_0(R) = v(R)/2.
inline SubsolutionShape choose_subsolution_params(double R, double v_at_R, const ModelParams& m) {
  detail::require_below_vinf(R, v_at_R, m, "choose_subsolution_params");
  SubsolutionShape s;
  s.gamma = gamma_thresholds(m.p, m.d).gamma_bar;
  s.b = subsolution_b(R, v_at_R, m, s.gamma);
  return s;
}

/// The δ = 1 − γ smallness conditions on the parabolic sub-solution v_0 φ(z), for
/// z below and above ζ₀: each returns the largest admissible δ ∈ (0, 1).
inline double parabolic_delta_limit(const ModelParams& m, const PlateauConstants& pc) {
  const double p = m.p;
  const double d = m.d;
  const double Bc = (p + 1.0) / (p - 1.0) - d + 1.0;
  const double kp = std::pow(pc.k1, p - 1.0);
  const double c_low = 1.0 + 0.5 * pc.k2 * (p - 1.0);
  const double c_high = 1.0 + 2.0 / (p - 1.0);
  // g(δ) ≥ 0 with g decreasing in δ; returns sup{δ : g(δ) ≥ 0} by bisection.
  auto largest = [](auto&& g) {
    if (g(1.0) >= 0.0) return 1.0;
    double lo = 0.0, hi = 1.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (g(mid) >= 0.0 ? lo : hi) = mid;
    }
    return lo;
  };
  const double d1 = largest([&](double dl) { return 2.0 * (1.0 - dl) * Bc * kp - c_low * (d - 2.0 + dl) * dl; });
  const double d2 = largest([&](double dl) { return (1.0 - dl) * (1.0 - dl) * Bc * kp - c_low * (d - 2.0) * dl; });
  const double d3 = largest([&](double dl) { return (1.0 - dl) - c_high * (d - 2.0 + dl) * dl; });
  const double d4 = largest([&](double dl) { return 0.5 * (1.0 - dl) * (1.0 - dl) - c_high * (d - 2.0) * dl; });
  return std::min({d1, d2, d3, d4});
}

/// Parabolic sub-solution shape: γ = max(γ̄, 1 − δ/2) with δ the largest value allowed by
/// the smallness conditions, b from v_0(R) = v(R)/2.
inline SubsolutionShape choose_parabolic_subsolution_params(double R, double v_at_R, const ModelParams& m,
                                                            const PlateauConstants& pc) {
  detail::require_below_vinf(R, v_at_R, m, "choose_parabolic_subsolution_params");
  const double delta = 0.5 * parabolic_delta_limit(m, pc);
  SubsolutionShape s;
  s.gamma = std::max(gamma_thresholds(m.p, m.d).gamma_bar, 1.0 - delta);
  s.b = subsolution_b(R, v_at_R, m, s.gamma);
  return s;
}

}  // namespace selfsim
