#pragma once

// Upper incomplete gamma function and the exact point-source solution of the
// linear heat equation with a source switched on at t = 0.

#include <cmath>
#include <limits>
#include <numbers>

#include "selfsim/errors.hpp"
#include "selfsim/model.hpp"

namespace selfsim {

namespace detail {

inline constexpr double kEulerGamma = 0.57721566490153286061;
inline constexpr double kGammaEps = 1e-16;
inline constexpr int kGammaMaxIter = 1000;

// Γ(a,x) = e^{-x} x^a / (x + 1 − a − 1(1−a)/(x + 3 − a − ...)), modified Lentz.
inline double gamma_continued_fraction(double a, double x) {
  constexpr double tiny = 1e-300;
  double b = x + 1.0 - a;
  double c = 1.0 / tiny;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i <= kGammaMaxIter; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kGammaEps) return std::exp(-x + a * std::log(x)) * h;
  }
  throw SolverError("specialfn", "incomplete gamma continued fraction did not converge", kGammaMaxIter);
}

// Lower incomplete gamma γ(a,x) = e^{-x} x^a Σ x^n / (a (a+1) ... (a+n)), a > 0.
inline double lower_gamma_series(double a, double x) {
  double ap = a;
  double del = 1.0 / a;
  double sum = del;
  for (int n = 1; n <= kGammaMaxIter; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * kGammaEps) return sum * std::exp(-x + a * std::log(x));
  }
  throw SolverError("specialfn", "incomplete gamma series did not converge", kGammaMaxIter);
}

// Small-order branch, 0 <= a < 1 and x < a + 1:
//   Γ(a,x) = (Γ(1+a) − x^a)/a + x^a Σ_{k≥1} (−1)^{k+1} x^k / (k! (a+k)).
// The first term reduces to −γ_E − ln x at a = 0, giving E₁(x).
inline double gamma_small_order(double a, double x) {
  const double lx = std::log(x);
  double head;
  if (a == 0.0) {
    head = -kEulerGamma - lx;
  } else {
    head = (std::expm1(std::lgamma(1.0 + a)) - std::expm1(a * lx)) / a;
  }
  double term = 1.0;  // x^k / k!
  double sum = 0.0;
  for (int k = 1; k <= kGammaMaxIter; ++k) {
    term *= x / k;
    const double contrib = term / (a + k);
    sum += (k % 2 == 1) ? contrib : -contrib;
    if (contrib < kGammaEps * std::fabs(sum)) break;
  }
  const double xa = (a == 0.0) ? 1.0 : std::exp(a * lx);
  return head + xa * sum;
}

}  // namespace detail

/// Γ(a,x) = ∫_x^∞ s^{a−1} e^{−s} ds for a ≥ 0, x ≥ 0 (excluding a = x = 0).
inline double upper_incomplete_gamma(double a, double x) {
  if (!(x >= 0.0)) throw DomainError("upper_incomplete_gamma: x must be >= 0");
  if (!(a >= 0.0)) throw DomainError("upper_incomplete_gamma: order a must be >= 0");
  if (a == 0.0 && x == 0.0) throw DomainError("upper_incomplete_gamma: Γ(0,0) diverges");
  if (x == 0.0) return std::tgamma(a);
  if (std::isinf(x)) return 0.0;
  if (x >= a + 1.0) return detail::gamma_continued_fraction(a, x);
  if (a < 1.0) return detail::gamma_small_order(a, x);
  return std::tgamma(a) - detail::lower_gamma_series(a, x);
}

/// Exponential integral E₁(x) = Γ(0,x), x > 0.
inline double exponential_integral_e1(double x) {
  if (!(x > 0.0)) throw DomainError("exponential_integral_e1: x must be > 0");
  return upper_incomplete_gamma(0.0, x);
}

/// I(r,t) scaled by α: α r^{2−d} Γ(d/2−1, r²/(4t)) / (4π^{d/2}), zero for t ≤ 0.
/// t = +∞ gives the stationary limit αΦ(r) for d ≥ 3; it diverges for d = 2.
inline double linear_solution_I(double r, double t, int d, double alpha) {
  if (!(r > 0.0)) throw DomainError("linear_solution_I: r must be > 0");
  if (d < 2) throw DomainError("linear_solution_I: dimension must be >= 2");
  if (!(alpha >= 0.0)) throw DomainError("linear_solution_I: alpha must be >= 0");
  if (!(t > 0.0)) return 0.0;
  const double a = 0.5 * d - 1.0;
  const double x = std::isinf(t) ? 0.0 : r * r / (4.0 * t);
  if (d == 2 && x == 0.0) throw DomainError("linear_solution_I: d = 2 solution grows without bound as t -> inf");
  const double g = upper_incomplete_gamma(a, x);
  return alpha * std::pow(r, 2.0 - d) * g / (4.0 * std::pow(std::numbers::pi, 0.5 * d));
}

enum class AsymptoteBranch { inner, outer };

/// Leading behavior of I (α = 1) for r ≪ √t (inner) and r ≫ √t (outer).
inline double linear_asymptote_I(double r, double t, int d, AsymptoteBranch branch) {
  if (!(r > 0.0)) throw DomainError("linear_asymptote_I: r must be > 0");
  if (!(t > 0.0)) throw DomainError("linear_asymptote_I: t must be > 0");
  if (branch == AsymptoteBranch::inner) {
    return std::pow(t, 1.0 - 0.5 * d) * fundamental_solution_phi(r / std::sqrt(t), d);
  }
  return std::pow(2.0, 2.0 - d) * std::pow(std::numbers::pi, -0.5 * d) * std::pow(t, 2.0 - 0.5 * d) *
         std::exp(-r * r / (4.0 * t)) / (r * r);
}

}  // namespace selfsim
