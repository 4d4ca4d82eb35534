#pragma once

// Reference values computed independently of the library's special-function code.

#include <cmath>
#include <functional>
#include <numbers>

#include "selfsim/model.hpp"
#include "selfsim/numerics.hpp"
#include "selfsim/radial.hpp"
#include "selfsim/specialfn.hpp"

namespace oracle {

// Adaptive Gauss-Kronrod (7/15); a panel pair is accepted when its error estimate is
// below rel_tol times the global magnitude, or at the depth limit.
inline double adaptive_gk15(const std::function<double(double)>& f, double a, double b, double rel_tol = 1e-14,
                            int max_depth = 40) {
  static constexpr double xk[8] = {0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
                                   0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
                                   0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
                                   0.207784955007898467600689403773245, 0.0};
  static constexpr double wk[8] = {0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
                                   0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
                                   0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
                                   0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
  static constexpr double wg[4] = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                   0.381830050505118944950369775488975, 0.417959183673469387755102040816327};
  auto rule = [&](double lo, double hi, double& err) {
    const double c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
    double k = wk[7] * f(c), g = wg[3] * f(c);
    for (int j = 0; j < 7; ++j) {
      const double s = f(c - h * xk[j]) + f(c + h * xk[j]);
      k += wk[j] * s;
      if (j % 2 == 1) g += wg[j / 2] * s;
    }
    err = std::fabs(h * (k - g));
    return h * k;
  };
  double err0 = 0.0;
  const double total = rule(a, b, err0);
  const double scale = std::max(std::fabs(total), 1e-300);
  if (err0 <= rel_tol * scale) return total;
  std::function<double(double, double, int)> rec = [&](double lo, double hi, int depth) {
    const double mid = 0.5 * (lo + hi);
    double e1 = 0.0, e2 = 0.0;
    const double l = rule(lo, mid, e1), r = rule(mid, hi, e2);
    if (depth >= max_depth || e1 + e2 <= rel_tol * scale) return l + r;
    return rec(lo, mid, depth + 1) + rec(mid, hi, depth + 1);
  };
  return rec(a, b, 0);
}

// Γ(a,x) = ∫_x^∞ s^{a−1} e^{−s} ds with s = e^u, which removes the endpoint singularity.
inline double upper_gamma(double a, double x) {
  const double lo = std::log(x);
  const double hi = std::log(std::max(x, 1.0) + 800.0);
  return adaptive_gk15([a](double u) { return std::exp(a * u - std::exp(u)); }, lo, hi);
}

// I(r,t) = α ∫_0^t (4πs)^{−d/2} e^{−r²/(4s)} ds, integrated in u = ln s.
inline double duhamel_I(double r, double t, int d, double alpha) {
  if (t <= 0.0) return 0.0;
  auto f = [r, d](double u) {
    const double s = std::exp(u);
    return s * std::pow(4.0 * std::numbers::pi * s, -0.5 * d) * std::exp(-r * r / (4.0 * s));
  };
  const double lo = std::log(r * r / (4.0 * 800.0));
  const double hi = std::log(t);
  if (hi <= lo) return 0.0;
  return alpha * adaptive_gk15(f, lo, hi);
}

// d = 3: α erfc(r/(2√t))/(4πr).
inline double erfc_I3(double r, double t, double alpha) {
  return alpha * std::erfc(r / (2.0 * std::sqrt(t))) / (4.0 * std::numbers::pi * r);
}

// (I(·,t) ∗ g_n)(r) by spherical means: ∫ g_n(q) q^{d−1}|S^{d−1}| ⟨I(|x − q e|, t)⟩_e dq.
inline double convolved_I(double r, double t, int d, const selfsim::Mollifier& moll) {
  using selfsim::GaussLegendre;
  static const GaussLegendre radial(24), angular(48);
  const double a = moll.support_radius();
  const double w = selfsim::sphere_area(d);
  const double pi = std::numbers::pi;
  auto mean = [&](double q) {
    double num = 0.0, den = 0.0;
    for (int k = 0; k < 4; ++k) {
      const double lo = k * pi / 4.0, hi = (k + 1) * pi / 4.0;
      num += angular.integrate(
          [&](double th) {
            const double rr = std::sqrt(r * r + q * q - 2.0 * r * q * std::cos(th));
            return std::pow(std::sin(th), d - 2) * selfsim::linear_solution_I(rr, t, d, 1.0);
          },
          lo, hi);
      den += angular.integrate([&](double th) { return std::pow(std::sin(th), d - 2); }, lo, hi);
    }
    return num / den;
  };
  double s = 0.0;
  for (int k = 0; k < 4; ++k)
    s += radial.integrate([&](double q) { return moll(q) * w * std::pow(q, d - 1) * mean(q); }, k * a / 4.0,
                          (k + 1) * a / 4.0);
  return s;
}

}  // namespace oracle
