#pragma once

// Self-similar profile φ(ζ) of the ultra-singular solution U = v_∞(x) φ(ln(|x|/√t)):
//
//   φ'' + a(ζ) φ' + B (φ − φ^p) = 0,   φ(−∞) = 1,   φ(+∞) = 0,
//   a(ζ) = e^{2ζ}/2 − (p+3)/(p−1) + d − 1,   B = (2/(p−1)) ((p+1)/(p−1) − d + 1).
//
// Two independent discretizations are provided: a second-order collocation
// solved by damped Newton, and a direct minimization of the discretized
// weighted energy whose Euler-Lagrange equation is the ODE.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/model.hpp"
#include "selfsim/numerics.hpp"

namespace selfsim {

struct ZetaGrid {
  double zeta_min = -8.0;
  double zeta_max = 2.5;
  std::vector<double> nodes;

  std::size_t size() const noexcept { return nodes.size(); }
  double spacing() const { return (zeta_max - zeta_min) / static_cast<double>(nodes.size() - 1); }
};

/// Uniform grid; enforces ζ_min ≤ −6 and e^{2ζ_max}/4 ≤ 700.
inline ZetaGrid make_zeta_grid(double zeta_min, double zeta_max, std::size_t n) {
  if (!(zeta_min <= -6.0)) throw DomainError("zeta grid: zeta_min must be <= -6");
  if (!(0.25 * std::exp(2.0 * zeta_max) <= 700.0)) throw DomainError("zeta grid: zeta_max too large for log-space");
  if (!(zeta_max > zeta_min)) throw DomainError("zeta grid: zeta_max must exceed zeta_min");
  if (n < 5) throw DomainError("zeta grid: need at least 5 nodes");
  ZetaGrid g{zeta_min, zeta_max, std::vector<double>(n)};
  const double h = (zeta_max - zeta_min) / static_cast<double>(n - 1);
  for (std::size_t i = 0; i < n; ++i) g.nodes[i] = zeta_min + h * static_cast<double>(i);
  g.nodes.back() = zeta_max;
  return g;
}

struct OdeCoefficients {
  double drift = 0.0;
  double reaction = 0.0;
};

inline double reaction_coefficient(const ModelParams& m) {
  return (2.0 / (m.p - 1.0)) * ((m.p + 1.0) / (m.p - 1.0) - m.d + 1.0);
}

inline OdeCoefficients ode_coefficients(double zeta, const ModelParams& m) {
  detail::require_admissible_exponent(m.p, m.d, "ode_coefficients");
  return {0.5 * std::exp(2.0 * zeta) - weight_exponent(m), reaction_coefficient(m)};
}

/// Exponent m of the algebraic factor in the tail: (5−p)/(p−1) − d + 1.
inline double tail_exponent(const ModelParams& m) { return (5.0 - m.p) / (m.p - 1.0) - m.d + 1.0; }

/// ln of the decay asymptote −e^{2ζ}/4 + ((5−p)/(p−1) − d + 1) ζ.
inline double tail_asymptote(double zeta, const ModelParams& m) {
  return -0.25 * std::exp(2.0 * zeta) + tail_exponent(m) * zeta;
}

/// d/dζ of tail_asymptote.
inline double tail_log_slope(double zeta, const ModelParams& m) {
  return -0.5 * std::exp(2.0 * zeta) + tail_exponent(m);
}

/// Rate λ of the plateau approach 1 − φ ~ e^{λζ} as ζ → −∞.
inline double plateau_decay_rate(const ModelParams& m) {
  const double k = weight_exponent(m);
  const double c = reaction_coefficient(m) * (m.p - 1.0);
  return 0.5 * (k + std::sqrt(k * k + 4.0 * c));
}

/// Grid deep enough that 1 − φ(ζ_min) ≲ 1e−12 and φ(ζ_max) ≈ e^{−32} times its prefactor.
inline ZetaGrid default_zeta_grid(const ModelParams& m, std::size_t n = 2000) {
  const double zmin = std::min(-8.0, std::floor(-28.0 / plateau_decay_rate(m)));
  double lo = 0.0, hi = 0.5 * std::log(2800.0);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (tail_asymptote(mid, m) > -32.0 ? lo : hi) = mid;
  }
  return make_zeta_grid(zmin, std::max(lo, 2.5), n);
}

/// Smooth non-increasing cutoff: 1 on (−∞, 0], 0 on [1, ∞).
inline double cutoff_eta(double zeta) { return 1.0 - smooth_step(Jet::constant(zeta)).f; }

enum class ProfileMethod { collocation, variational };

struct Profile {
  ZetaGrid grid;
  std::vector<double> values;      ///< φ(ζ_i)
  std::vector<double> complement;  ///< 1 − φ(ζ_i), resolved below double spacing near the plateau
  std::vector<double> derivative;  ///< φ'(ζ_i)
  std::vector<double> residual;    ///< discrete equation residual per node
  bool tail_matched = false;
  ModelParams params;
  ProfileMethod method = ProfileMethod::collocation;
  int iterations = 0;

  /// ln φ(ζ_max) − tail_asymptote(ζ_max): fitted log prefactor of the decay.
  double tail_log_constant() const { return std::log(values.back()) - tail_asymptote(grid.zeta_max, params); }

  double max_residual() const {
    double r = 0.0;
    for (std::size_t i = 1; i < residual.size(); ++i) r = std::max(r, std::fabs(residual[i]));
    return r;
  }

  /// φ at any ζ: cubic Hermite inside the grid, 1 to the left, fitted asymptote to the right.
  double value_at(double zeta) const {
    if (zeta <= grid.zeta_min) return values.front();
    if (zeta >= grid.zeta_max) return std::exp(tail_log_constant() + tail_asymptote(zeta, params));
    const std::size_t k = bracket_index(grid.nodes, zeta);
    return hermite_cubic(grid.nodes[k], grid.nodes[k + 1], values[k], values[k + 1], derivative[k],
                         derivative[k + 1], zeta);
  }

  double derivative_at(double zeta) const {
    if (zeta <= grid.zeta_min) return 0.0;
    if (zeta >= grid.zeta_max) return value_at(zeta) * tail_log_slope(zeta, params);
    const std::size_t k = bracket_index(grid.nodes, zeta);
    return hermite_cubic_derivative(grid.nodes[k], grid.nodes[k + 1], values[k], values[k + 1],
                                    derivative[k], derivative[k + 1], zeta);
  }
};

/// First violated Profile invariant, if any.
inline std::optional<std::string> profile_invariant_violation(const Profile& pr) {
  const std::size_t n = pr.values.size();
  if (pr.values.front() < 1.0 - 1e-6) return "phi(zeta_min) below 1 - 1e-6";
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!(pr.values[i] > 0.0 && pr.complement[i] > 0.0))
      return "phi outside (0,1) at node " + std::to_string(i);
    if (!(pr.derivative[i] < 0.0)) return "phi' not negative at node " + std::to_string(i);
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const bool decreasing = pr.values[i] > 0.5 ? pr.complement[i + 1] > pr.complement[i]
                                               : pr.values[i + 1] < pr.values[i];
    if (!decreasing) return "phi not strictly decreasing at node " + std::to_string(i);
  }
  return std::nullopt;
}

namespace detail {

inline double signed_pow(double x, double p) { return std::copysign(std::pow(std::fabs(x), p), x); }

// Nodal values where nodes below `split` store 1 − φ and the rest store φ, so that
// both the plateau defect and the double-exponential tail keep full relative precision.
struct SplitValues {
  std::vector<double> y;
  std::size_t split = 0;

  std::size_t size() const noexcept { return y.size(); }
  bool plateau(std::size_t i) const noexcept { return i < split; }
  double sigma(std::size_t i) const noexcept { return plateau(i) ? -1.0 : 1.0; }
  double phi(std::size_t i) const noexcept { return plateau(i) ? 1.0 - y[i] : y[i]; }
  double psi(std::size_t i) const noexcept { return plateau(i) ? y[i] : 1.0 - y[i]; }
  /// φ_j − φ_i without cancellation when both nodes sit on the same side.
  double diff(std::size_t i, std::size_t j) const noexcept {
    if (plateau(i) && plateau(j)) return y[i] - y[j];
    if (!plateau(i) && !plateau(j)) return y[j] - y[i];
    return phi(j) - phi(i);
  }
  /// φ − φ^p.
  double reaction(std::size_t i, double p) const {
    if (plateau(i)) return -(1.0 - y[i]) * std::expm1((p - 1.0) * std::log1p(-y[i]));
    return y[i] - signed_pow(y[i], p);
  }

  static SplitValues from_phi(std::span<const double> phi) {
    SplitValues s;
    s.y.resize(phi.size());
    while (s.split < phi.size() && phi[s.split] > 0.5) ++s.split;
    for (std::size_t i = 0; i < phi.size(); ++i) s.y[i] = s.plateau(i) ? 1.0 - phi[i] : phi[i];
    return s;
  }
};

inline void fill_profile_values(Profile& pr, const SplitValues& v, double slope) {
  const std::size_t n = v.size();
  const double h = pr.grid.spacing();
  pr.values.resize(n);
  pr.complement.resize(n);
  pr.derivative.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    pr.values[i] = v.phi(i);
    pr.complement[i] = v.psi(i);
  }
  pr.derivative[0] = (4.0 * v.diff(0, 1) - v.diff(0, 2)) / (2.0 * h);
  for (std::size_t i = 1; i + 1 < n; ++i) {
    // Past the plateau φ decays like a Gaussian in e^ζ; differencing ln φ avoids the
    // O((h φ'/φ)²) bias of a plain central difference there.
    if (!v.plateau(i - 1) && v.y[i - 1] > 0.0 && v.y[i + 1] > 0.0)
      pr.derivative[i] = v.y[i] * (std::log(v.y[i + 1]) - std::log(v.y[i - 1])) / (2.0 * h);
    else
      pr.derivative[i] = v.diff(i - 1, i + 1) / (2.0 * h);
  }
  pr.derivative[n - 1] = slope * v.phi(n - 1);
}

// Collocation residual on split values; node 0 carries the Dirichlet closure.
inline std::vector<double> collocation_residual(const SplitValues& v, const ZetaGrid& grid, const ModelParams& m) {
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  const double B = reaction_coefficient(m);
  const double s = tail_log_slope(grid.zeta_max, m);
  std::vector<double> F(n, 0.0);
  F[0] = -v.psi(0);
  for (std::size_t i = 1; i < n; ++i) {
    const double a = ode_coefficients(grid.nodes[i], m).drift;
    const double reac = B * v.reaction(i, m.p);
    if (i + 1 < n) {
      F[i] = (v.diff(i, i - 1) + v.diff(i, i + 1)) / (h * h) + a * v.diff(i - 1, i + 1) / (2.0 * h) + reac;
    } else {
      // Ghost node φ_N = φ_{N−2} + 2 h s φ_{N−1} closes φ'/φ = s.
      F[i] = (2.0 * v.diff(i, i - 1) + 2.0 * h * s * v.phi(i)) / (h * h) + a * s * v.phi(i) + reac;
    }
  }
  return F;
}

inline double tail_norm_inf(const std::vector<double>& v) {
  double r = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) r = std::max(r, std::fabs(v[i]));
  return r;
}

}  // namespace detail

/// Residual of the collocation equations for nodal values φ.
inline std::vector<double> collocation_residual(std::span<const double> phi, const ZetaGrid& grid,
                                                const ModelParams& m) {
  return detail::collocation_residual(detail::SplitValues::from_phi(phi), grid, m);
}

/// Damped Newton on the collocation equations, started from η shifted to ζ ≈ 0.
inline Profile solve_profile_collocation(const ModelParams& m, const ZetaGrid& grid, double tol = 1e-10,
                                         int max_iterations = 100) {
  m.validate();
  const std::size_t n = grid.size();
  const double h = grid.spacing();
  const double B = reaction_coefficient(m);
  const double s = tail_log_slope(grid.zeta_max, m);
  std::vector<double> start(n);
  for (std::size_t i = 0; i < n; ++i) start[i] = cutoff_eta(grid.nodes[i] + 0.5);
  start[0] = 1.0;
  detail::SplitValues v = detail::SplitValues::from_phi(start);

  auto norm2 = [](const std::vector<double>& r) {
    double s2 = 0.0;
    for (std::size_t i = 1; i < r.size(); ++i) s2 += r[i] * r[i];
    return std::sqrt(s2);
  };

  std::vector<double> F = detail::collocation_residual(v, grid, m);
  int iter = 0;
  for (; iter < max_iterations && detail::tail_norm_inf(F) > tol; ++iter) {
    const std::size_t nu = n - 1;
    Tridiagonal J(nu);
    std::vector<double> rhs(nu);
    for (std::size_t k = 0; k < nu; ++k) {
      const std::size_t i = k + 1;
      const double a = ode_coefficients(grid.nodes[i], m).drift;
      const double dreac = B * (1.0 - m.p * std::pow(std::fabs(v.phi(i)), m.p - 1.0));
      double lo, di, up = 0.0;
      if (i + 1 < n) {
        lo = 1.0 / (h * h) - a / (2.0 * h);
        di = -2.0 / (h * h) + dreac;
        up = 1.0 / (h * h) + a / (2.0 * h);
      } else {
        lo = 2.0 / (h * h);
        di = (-2.0 + 2.0 * h * s) / (h * h) + a * s + dreac;
      }
      // Chain rule through φ_j = 1 − y_j on the plateau side.
      J.lower[k] = lo * v.sigma(i - 1);
      J.diag[k] = di * v.sigma(i);
      if (i + 1 < n) J.upper[k] = up * v.sigma(i + 1);
      rhs[k] = -F[i];
    }
    J.lower[0] = 0.0;  // node 0 is fixed
    const std::vector<double> delta = solve_tridiagonal(std::move(J), std::move(rhs));

    const double f0 = norm2(F);
    double lambda = 1.0;
    bool accepted = false;
    detail::SplitValues trial = v;
    for (int halving = 0; halving <= 30; ++halving) {
      for (std::size_t k = 0; k < nu; ++k) trial.y[k + 1] = v.y[k + 1] + lambda * delta[k];
      std::vector<double> Ft = detail::collocation_residual(trial, grid, m);
      if (norm2(Ft) <= (1.0 - 1e-4 * lambda) * f0) {
        std::swap(v, trial);
        F.swap(Ft);
        accepted = true;
        break;
      }
      lambda *= 0.5;
    }
    if (!accepted) throw SolverError("profile", "collocation line search failed", iter, detail::tail_norm_inf(F));
  }
  if (detail::tail_norm_inf(F) > tol)
    throw SolverError("profile", "collocation Newton did not converge", iter, detail::tail_norm_inf(F));

  Profile pr;
  pr.grid = grid;
  pr.params = m;
  detail::fill_profile_values(pr, v, s);
  pr.residual = F;
  pr.residual[0] = 0.0;
  pr.tail_matched = true;
  pr.method = ProfileMethod::collocation;
  pr.iterations = iter;
  if (auto bad = profile_invariant_violation(pr))
    throw SolverError("profile", "collocation result violates invariant: " + *bad +
                                     " (grid too coarse or zeta_min too shallow)");
  return pr;
}

/// Discretized weighted energy
///   E[φ] = ∫ { ½ φ'² + C (p−1) η − C φ² (p+1 − 2φ^{p−1}) } ρ dζ,  C = 1/(p−1)² − (d−1)/(p²−1),
/// trapezoidal in ζ with ρ carried in log-space, plus the closure ½|s| ρ(ζ_max) φ(ζ_max)²
/// whose natural boundary condition is the decay slope φ'/φ = s at ζ_max.
class EnergyFunctional {
 public:
  EnergyFunctional(const ZetaGrid& grid, const ModelParams& m) : grid_(grid), m_(m) {
    detail::require_admissible_exponent(m.p, m.d, "energy");
    const std::size_t n = grid.size();
    h_ = grid.spacing();
    coef_ = 1.0 / ((m.p - 1.0) * (m.p - 1.0)) - (m.d - 1.0) / (m.p * m.p - 1.0);
    slope_ = tail_log_slope(grid.zeta_max, m);
    log_rho_.resize(n);
    eta_.resize(n);
    weight_.assign(n, 1.0);
    weight_.front() = weight_.back() = 0.5;
    for (std::size_t i = 0; i < n; ++i) {
      log_rho_[i] = log_weight_rho(grid.nodes[i], m);
      eta_[i] = cutoff_eta(grid.nodes[i]);
    }
    cell_rho_.resize(n - 1);
    for (std::size_t j = 0; j + 1 < n; ++j)
      cell_rho_[j] = 0.5 * (guarded_exp(log_rho_[j]) + guarded_exp(log_rho_[j + 1]));
  }

  const ZetaGrid& grid() const { return grid_; }
  const std::vector<double>& eta() const { return eta_; }

  /// (p−1)η − (p+1)φ² + 2φ^{p+1} given φ and ψ = 1 − φ; series in ψ near the plateau.
  double bracket(double eta, double phi, double psi) const {
    const double p = m_.p;
    if (psi < 0.05) {
      // (p−1) − (p+1)φ² + 2φ^{p+1} = (p²−1)ψ² + 2 Σ_{k≥3} C(p+1,k)(−ψ)^k
      double g = (p * p - 1.0) * psi * psi;
      double binom = (p + 1.0) * p * 0.5;
      double pw = psi * psi;
      for (int k = 3; k < 80; ++k) {
        binom *= (p + 1.0 - (k - 1)) / k;
        pw *= -psi;
        const double t = 2.0 * binom * pw;
        g += t;
        if (std::fabs(t) <= 1e-18 * std::fabs(g)) break;
      }
      return (p - 1.0) * (eta - 1.0) + g;
    }
    return (p - 1.0) * eta - (p + 1.0) * phi * phi + 2.0 * std::pow(std::max(phi, 0.0), p + 1.0);
  }

  double value(const detail::SplitValues& v) const {
    const std::size_t n = grid_.size();
    double e = 0.0;
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double q = v.diff(j, j + 1);
      e += 0.5 * cell_rho_[j] * q * q / h_;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const double br = coef_ * bracket(eta_[i], v.phi(i), v.psi(i));
      if (br == 0.0) continue;
      const double lg = log_rho_[i] + std::log(std::fabs(br) * weight_[i] * h_);
      if (lg < -745.0) continue;
      if (lg > 700.0) throw SolverError("profile", "energy overflow: candidate violates tail decay");
      e += std::copysign(std::exp(lg), br);
    }
    const double last = v.phi(n - 1);
    e += 0.5 * std::fabs(slope_) * guarded_exp(log_rho_[n - 1]) * last * last;
    return e;
  }

  double value(std::span<const double> phi) const { return value(detail::SplitValues::from_phi(phi)); }

  /// ∂E/∂φ_i.
  std::vector<double> gradient(const detail::SplitValues& v) const {
    const std::size_t n = grid_.size();
    const double p = m_.p;
    std::vector<double> g(n, 0.0);
    for (std::size_t j = 0; j + 1 < n; ++j) {
      const double flux = cell_rho_[j] * v.diff(j, j + 1) / h_;
      g[j] -= flux;
      g[j + 1] += flux;
    }
    for (std::size_t i = 0; i < n; ++i) {
      double reac;
      if (v.plateau(i)) {
        reac = v.reaction(i, p);
      } else {
        const double ph = std::max(v.phi(i), 0.0);
        reac = ph - std::pow(ph, p);
      }
      g[i] += weight_[i] * h_ * guarded_exp(log_rho_[i]) * coef_ * (-2.0 * (p + 1.0) * reac);
    }
    g[n - 1] += std::fabs(slope_) * guarded_exp(log_rho_[n - 1]) * v.phi(n - 1);
    return g;
  }

  std::vector<double> gradient(std::span<const double> phi) const {
    return gradient(detail::SplitValues::from_phi(phi));
  }

  /// ∂²E/∂φ² restricted to nodes 1..N−1 as (diag, off).
  std::pair<std::vector<double>, std::vector<double>> hessian(const detail::SplitValues& v) const {
    const std::size_t n = grid_.size();
    const double p = m_.p;
    std::vector<double> diag(n - 1, 0.0), off(n - 2, 0.0);
    for (std::size_t i = 1; i < n; ++i) {
      double dg = cell_rho_[i - 1] / h_;
      if (i + 1 < n) dg += cell_rho_[i] / h_;
      const double ph = std::max(v.phi(i), 0.0);
      const double d2br = -2.0 * (p + 1.0) * (1.0 - p * std::pow(ph, p - 1.0));
      dg += weight_[i] * h_ * guarded_exp(log_rho_[i]) * coef_ * d2br;
      if (i + 1 == n) dg += std::fabs(slope_) * guarded_exp(log_rho_[n - 1]);
      diag[i - 1] = dg;
      if (i + 1 < n) off[i - 1] = -cell_rho_[i] / h_;
    }
    return {diag, off};
  }

  /// Gradient in the L²(dμ) metric, −g_i / (w_i h ρ_i): the discrete ODE residual.
  std::vector<double> scaled_residual(std::span<const double> g) const {
    std::vector<double> r(g.size(), 0.0);
    for (std::size_t i = 1; i < g.size(); ++i) r[i] = -g[i] / (weight_[i] * h_ * guarded_exp(log_rho_[i]));
    return r;
  }

 private:
  static double guarded_exp(double lg) {
    if (lg > 700.0) throw SolverError("profile", "energy overflow: weight exceeds double range");
    return std::exp(lg);
  }

  ZetaGrid grid_;
  ModelParams m_;
  double h_ = 0.0;
  double coef_ = 0.0;
  double slope_ = 0.0;
  std::vector<double> log_rho_, eta_, weight_, cell_rho_;
};

/// Discretized weighted energy of nodal values on a ζ-grid.
inline double energy(std::span<const double> values, const ZetaGrid& grid, const ModelParams& m) {
  return EnergyFunctional(grid, m).value(values);
}

/// Projected Newton minimization of the discretized energy over [0,1]^N with φ(ζ_min) = 1,
/// started from η. Converges when the μ-weighted projected gradient is below tol.
inline Profile solve_profile_variational(const ModelParams& m, const ZetaGrid& grid, double tol = 1e-10,
                                         int max_iterations = 200) {
  m.validate();
  const EnergyFunctional E(grid, m);
  const std::size_t n = grid.size();
  std::vector<double> start = E.eta();
  start[0] = 1.0;
  detail::SplitValues v = detail::SplitValues::from_phi(start);

  // Box constraints expressed on y: 0 ≤ y ≤ 1 on both sides of the split.
  auto active = [&](const detail::SplitValues& x, const std::vector<double>& g, std::size_t i) {
    const double gy = g[i] * x.sigma(i);
    return (x.y[i] <= 0.0 && gy > 0.0) || (x.y[i] >= 1.0 && gy < 0.0);
  };
  auto projected_measure = [&](const detail::SplitValues& x, const std::vector<double>& g) {
    const std::vector<double> r = E.scaled_residual(g);
    double worst = 0.0;
    for (std::size_t i = 1; i < n; ++i)
      if (!active(x, g, i)) worst = std::max(worst, std::fabs(r[i]));
    return worst;
  };

  std::vector<double> g = E.gradient(v);
  double measure = projected_measure(v, g);
  double e_cur = E.value(v);
  int iter = 0;
  for (; iter < max_iterations && measure > tol; ++iter) {
    auto [diag, off] = E.hessian(v);
    // Hessian in y: D H D with D = diag(σ).
    for (std::size_t k = 0; k < off.size(); ++k) off[k] *= v.sigma(k + 1) * v.sigma(k + 2);
    std::vector<double> rhs(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const std::size_t i = k + 1;
      if (active(v, g, i)) {
        rhs[k] = 0.0;
        diag[k] = 1.0;
        if (k > 0) off[k - 1] = 0.0;
        if (k < off.size()) off[k] = 0.0;
      } else {
        rhs[k] = -g[i] * v.sigma(i);
      }
    }
    std::optional<std::vector<double>> step = solve_spd_tridiagonal(diag, off, rhs);
    for (double mu = 1e-8; !step && mu < 1e8; mu *= 10.0) {
      std::vector<double> shifted = diag;
      for (std::size_t k = 0; k < shifted.size(); ++k) shifted[k] += mu * std::fabs(diag[k]);
      step = solve_spd_tridiagonal(shifted, off, rhs);
    }
    if (!step) throw SolverError("profile", "variational Hessian could not be regularized", iter, measure);

    // Near the minimizer energy differences drop below rounding, so a full step that
    // halves the weighted gradient is taken without consulting the energy.
    detail::SplitValues trial = v;
    for (std::size_t k = 0; k + 1 < n; ++k) trial.y[k + 1] = std::clamp(v.y[k + 1] + (*step)[k], 0.0, 1.0);
    bool accepted = false;
    try {
      if (projected_measure(trial, E.gradient(trial)) < 0.5 * measure) {
        accepted = true;
        e_cur = E.value(trial);
      }
    } catch (const SolverError&) {
    }
    double lambda = 1.0;
    for (int halving = 0; halving <= 30 && !accepted; ++halving, lambda *= 0.5) {
      double decrease = 0.0;
      for (std::size_t k = 0; k + 1 < n; ++k) {
        trial.y[k + 1] = std::clamp(v.y[k + 1] + lambda * (*step)[k], 0.0, 1.0);
        decrease += g[k + 1] * v.sigma(k + 1) * (trial.y[k + 1] - v.y[k + 1]);
      }
      double e_trial;
      try {
        e_trial = E.value(trial);
      } catch (const SolverError&) {
        continue;
      }
      if (e_trial <= e_cur + 1e-4 * decrease && decrease < 0.0) {
        accepted = true;
        e_cur = e_trial;
      }
    }
    if (!accepted) throw SolverError("profile", "variational line search failed", iter, measure);
    std::swap(v, trial);
    g = E.gradient(v);
    measure = projected_measure(v, g);
  }
  if (measure > tol) throw SolverError("profile", "variational minimization did not converge", iter, measure);
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (v.phi(i) <= 0.0 || v.psi(i) <= 0.0)
      throw SolverError("profile", "variational minimizer touches the box at node " + std::to_string(i) +
                                       " (discretization failure)");

  Profile pr;
  pr.grid = grid;
  pr.params = m;
  detail::fill_profile_values(pr, v, tail_log_slope(grid.zeta_max, m));
  pr.residual = E.scaled_residual(g);
  pr.tail_matched = true;
  pr.method = ProfileMethod::variational;
  pr.iterations = iter;
  if (auto bad = profile_invariant_violation(pr))
    throw SolverError("profile", "variational result violates invariant: " + *bad);
  return pr;
}

/// Smallest node ζ₀ ≥ 0 with φ ≤ |φ'| at every node from ζ₀ on.
inline double zeta0_threshold(const Profile& pr) {
  const std::size_t n = pr.values.size();
  std::size_t first_ok = n;
  for (std::size_t i = n; i-- > 0;) {
    if (pr.grid.nodes[i] < 0.0) break;
    if (pr.values[i] <= std::fabs(pr.derivative[i])) {
      first_ok = i;
    } else {
      break;
    }
  }
  if (first_ok == n) throw SolverError("profile", "zeta0 not found: grid too short on the right");
  return pr.grid.nodes[first_ok];
}

/// k₁ = min φ and k₂ = max |φ'| over [ζ_min, ζ₀].
struct PlateauConstants {
  double zeta0 = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
};

inline PlateauConstants plateau_constants(const Profile& pr) {
  PlateauConstants c;
  c.zeta0 = zeta0_threshold(pr);
  c.k1 = 1.0;
  for (std::size_t i = 0; i < pr.values.size() && pr.grid.nodes[i] <= c.zeta0; ++i) {
    c.k1 = std::min(c.k1, pr.values[i]);
    c.k2 = std::max(c.k2, std::fabs(pr.derivative[i]));
  }
  return c;
}

}  // namespace selfsim
