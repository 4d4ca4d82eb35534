#pragma once

// Closed-form quantities of the absorption model u_t = Δu − u^p + αδ(x):
// admissibility, the singular stationary solution, the algebraic
// sub-solution family v_0 and the weight of the profile energy.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "selfsim/errors.hpp"

namespace selfsim {

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Critical exponent p*(d): +∞ for d = 2, d/(d−2) for d ≥ 3.
inline double serrin_exponent(int d) {
  if (d < 2) throw DomainError("serrin_exponent: dimension must be >= 2, got " + std::to_string(d));
  if (d == 2) return kInfinity;
  return static_cast<double>(d) / static_cast<double>(d - 2);
}

struct ModelParams {
  int d = 2;
  double p = 2.0;
  double alpha = 1.0;

  bool admissible() const noexcept {
    return d >= 2 && p > 1.0 && p < serrin_exponent(d) && alpha >= 0.0 && std::isfinite(p) &&
           std::isfinite(alpha);
  }

  /// Throws DomainError naming the violated constraint.
  void validate() const {
    if (d < 2) throw DomainError("model: dimension d must be >= 2, got " + std::to_string(d));
    if (!(p > 1.0) || !std::isfinite(p))
      throw DomainError("model: exponent p must be a finite number > 1, got " + std::to_string(p));
    if (!(p < serrin_exponent(d)))
      throw DomainError("model: exponent p = " + std::to_string(p) + " is not below p*(" +
                        std::to_string(d) + ") = " + std::to_string(serrin_exponent(d)));
    if (!(alpha >= 0.0) || !std::isfinite(alpha))
      throw DomainError("model: source strength alpha must be >= 0, got " + std::to_string(alpha));
  }
};

inline ModelParams make_params(int d, double p, double alpha) {
  ModelParams m{d, p, alpha};
  m.validate();
  return m;
}

namespace detail {
inline void require_admissible_exponent(double p, int d, const char* who) {
  if (d < 2) throw DomainError(std::string(who) + ": dimension must be >= 2");
  if (!(p > 1.0) || !(p < serrin_exponent(d)))
    throw DomainError(std::string(who) + ": need 1 < p < p*(d), got p = " + std::to_string(p) +
                      ", d = " + std::to_string(d));
}
}  // namespace detail

/// Surface area |S^{d−1}| of the unit sphere in R^d.
inline double sphere_area(int d) {
  if (d < 1) throw DomainError("sphere_area: dimension must be >= 1");
  const double half = 0.5 * d;
  return 2.0 * std::pow(std::numbers::pi, half) / std::tgamma(half);
}

/// c(p,d) = [ (2/(p−1)) (2p/(p−1) − d) ]^{1/(p−1)}.
inline double singular_amplitude_c(double p, int d) {
  detail::require_admissible_exponent(p, d, "singular_amplitude_c");
  const double q = p - 1.0;
  const double bracket = (2.0 / q) * (2.0 * p / q - d);
  if (!(bracket > 0.0)) throw DomainError("singular_amplitude_c: bracket is not positive");
  return std::pow(bracket, 1.0 / q);
}

/// Fundamental solution of −Δ in R^d as a function of |x|.
inline double fundamental_solution_phi(double r, int d) {
  if (!(r > 0.0)) throw DomainError("fundamental_solution_phi: r must be > 0");
  if (d < 2) throw DomainError("fundamental_solution_phi: dimension must be >= 2");
  if (d == 2) return -std::log(r) / (2.0 * std::numbers::pi);
  return std::pow(r, 2.0 - d) / ((d - 2) * sphere_area(d));
}

/// v_∞(r) = c(p,d) r^{−2/(p−1)}.
inline double v_infinity(double r, const ModelParams& m) {
  if (!(r > 0.0)) throw DomainError("v_infinity: r must be > 0");
  return singular_amplitude_c(m.p, m.d) * std::pow(r, -2.0 / (m.p - 1.0));
}

struct SubsolutionShape {
  double gamma = 0.5;
  double b = 0.0;
};

/// v_0(r) = c(p,d) / (r + b r^γ)^{2/(p−1)}.
inline double subsolution_v0(double r, const ModelParams& m, const SubsolutionShape& s) {
  if (!(r > 0.0)) throw DomainError("subsolution_v0: r must be > 0");
  return singular_amplitude_c(m.p, m.d) * std::pow(r + s.b * std::pow(r, s.gamma), -2.0 / (m.p - 1.0));
}

/// s(γ) = γ² − (4p/(p−1) − d) γ + d − 1.
inline double s_polynomial(double gamma, double p, int d) {
  return gamma * gamma - (4.0 * p / (p - 1.0) - d) * gamma + (d - 1.0);
}

struct GammaThresholds {
  double gamma1 = 0.0;
  double gamma2 = 0.0;
  double gamma_bar = 0.0;
};

/// γ₁ = (d−2)(p−1)/2, γ₂ = smaller root of s, γ̄ = max(γ₁, γ₂).
inline GammaThresholds gamma_thresholds(double p, int d) {
  detail::require_admissible_exponent(p, d, "gamma_thresholds");
  GammaThresholds g;
  g.gamma1 = 0.5 * (d - 2) * (p - 1.0);
  // Roots of γ² − Bγ + C with B > 0, C = d − 1 > 0; the smaller one as C/q.
  const double B = 4.0 * p / (p - 1.0) - d;
  const double C = d - 1.0;
  const double disc = B * B - 4.0 * C;
  if (!(disc >= 0.0)) throw DomainError("gamma_thresholds: s(γ) has no real root");
  const double q = 0.5 * (B + std::sqrt(disc));
  g.gamma2 = C / q;
  g.gamma_bar = std::max(g.gamma1, g.gamma2);
  return g;
}

/// K(d): 1 for d = 2, (p*+1)/(p*−1) for d ≥ 3 (which equals d − 1).
inline double k_coefficient(int d) {
  if (d < 2) throw DomainError("k_coefficient: dimension must be >= 2");
  if (d == 2) return 1.0;
  const double ps = serrin_exponent(d);
  return (ps + 1.0) / (ps - 1.0);
}

/// (p+1)/(p−1) − K(d): positive exactly on the admissible range.
inline double energy_prefactor(double p, int d) { return (p + 1.0) / (p - 1.0) - k_coefficient(d); }

/// Exponent coefficient (p+3)/(p−1) − d + 1 of the weight ρ.
inline double weight_exponent(const ModelParams& m) { return (m.p + 3.0) / (m.p - 1.0) - m.d + 1.0; }

/// log ρ(ζ) = e^{2ζ}/4 − ((p+3)/(p−1) − d + 1) ζ.
inline double log_weight_rho(double zeta, const ModelParams& m) {
  return 0.25 * std::exp(2.0 * zeta) - weight_exponent(m) * zeta;
}

/// ρ(ζ); overflows to +∞ once log ρ exceeds ~709. Use log_weight_rho for products.
inline double weight_rho(double zeta, const ModelParams& m) { return std::exp(log_weight_rho(zeta, m)); }

}  // namespace selfsim
