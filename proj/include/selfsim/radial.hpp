#pragma once

// Radial grids with finite-volume geometry, the mollified point source and the
// truncated absorption nonlinearity.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "selfsim/errors.hpp"
#include "selfsim/model.hpp"
#include "selfsim/numerics.hpp"

namespace selfsim {

/// Node-centered radial grid r_0 = 0 < ... < r_{N−1} = R_out.
///
/// Nodes come from the smooth map r(ξ) = R_out sinh(βξ)/sinh β on a uniform ξ-lattice:
/// nearly uniform spacing h_0 at the axis, geometric growth beyond r ~ R_out/sinh β.
/// Cell i spans [m_{i−1/2}, m_{i+1/2}] with midpoint faces and m_{−1/2} = 0.
struct RadialGrid {
  int d = 2;
  double r_out = 1.0;
  double beta = 0.0;
  std::vector<double> r;
  std::vector<double> volume;       ///< |S^{d−1}| (m_{i+½}^d − m_{i−½}^d)/d
  std::vector<double> conductance;  ///< [i] couples i and i+1: |S^{d−1}| m_{i+½}^{d−1}/(r_{i+1} − r_i)

  std::size_t size() const noexcept { return r.size(); }
  double spacing(std::size_t i) const { return r[i + 1] - r[i]; }

  std::size_t nodes_below(double x) const {
    return static_cast<std::size_t>(std::upper_bound(r.begin(), r.end(), x) - r.begin());
  }
};

namespace detail {

inline double sinh_map(double xi, double beta, double r_out) {
  if (beta == 0.0) return r_out * xi;
  return r_out * std::sinh(beta * xi) / std::sinh(beta);
}

inline void fill_geometry(RadialGrid& g) {
  const std::size_t n = g.r.size();
  const double w = sphere_area(g.d);
  g.volume.assign(n, 0.0);
  g.conductance.assign(n - 1, 0.0);
  double inner = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double outer = (i + 1 < n) ? 0.5 * (g.r[i] + g.r[i + 1]) : g.r[i];
    g.volume[i] = w * (std::pow(outer, g.d) - std::pow(inner, g.d)) / g.d;
    if (i + 1 < n) g.conductance[i] = w * std::pow(outer, g.d - 1) / (g.r[i + 1] - g.r[i]);
    inner = outer;
  }
}

inline RadialGrid build_radial_grid(int d, double r_out, double beta, std::size_t n) {
  RadialGrid g;
  g.d = d;
  g.r_out = r_out;
  g.beta = beta;
  g.r.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double xi = static_cast<double>(j) / static_cast<double>(n - 1);
    g.r[j] = sinh_map(xi, beta, r_out);
  }
  g.r.front() = 0.0;
  g.r.back() = r_out;
  fill_geometry(g);
  return g;
}

}  // namespace detail

/// Grid of n nodes on [0, r_out] whose spacing at the axis is (at most) core_spacing.
inline RadialGrid make_radial_grid(int d, double r_out, std::size_t n, double core_spacing) {
  if (d < 2) throw DomainError("radial grid: dimension must be >= 2");
  if (!(r_out > 0.0)) throw DomainError("radial grid: R_out must be > 0");
  if (n < 5) throw DomainError("radial grid: need at least 5 nodes");
  if (!(core_spacing > 0.0)) throw DomainError("radial grid: core spacing must be > 0");
  // h_0 = R_out β / ((n−1) sinh β); β/sinh β is decreasing from 1.
  const double target = core_spacing * static_cast<double>(n - 1) / r_out;
  double beta = 0.0;
  if (target < 1.0) {
    double lo = 0.0, hi = 1.0;
    while (hi / std::sinh(hi) > target) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mid / std::sinh(mid) > target ? lo : hi) = mid;
    }
    beta = hi;
  }
  return detail::build_radial_grid(d, r_out, beta, n);
}

/// Same map with every ξ-cell bisected: old nodes are kept bit for bit.
inline RadialGrid refine(const RadialGrid& g) { return detail::build_radial_grid(g.d, g.r_out, g.beta, 2 * g.size() - 1); }

/// Cubic Lagrange interpolation on the four nodes around x.
inline double interpolate_local(std::span<const double> r, std::span<const double> u, double x) {
  const std::size_t n = r.size();
  std::size_t k = bracket_index(r, x);
  std::size_t lo = (k == 0) ? 0 : k - 1;
  if (lo + 3 >= n) lo = n - 4;
  double s = 0.0;
  for (std::size_t a = lo; a < lo + 4; ++a) {
    double w = 1.0;
    for (std::size_t b = lo; b < lo + 4; ++b)
      if (b != a) w *= (x - r[b]) / (r[a] - r[b]);
    s += w * u[a];
  }
  return s;
}

/// Smooth unit-mass bump g(ρ) = C exp(−1/(1−ρ²)) on the unit ball and g_n(r) = n^d g(nr).
class Mollifier {
 public:
  Mollifier(int n, int d) : n_(n), d_(d) {
    if (n < 1) throw DomainError("mollifier: n must be >= 1");
    if (d < 2) throw DomainError("mollifier: dimension must be >= 2");
    const double mass = sphere_area(d) * integrate_shape(0.0, 1.0, [](double) { return 1.0; });
    norm_ = 1.0 / mass;
  }

  int n() const noexcept { return n_; }
  int d() const noexcept { return d_; }
  double normalization() const noexcept { return norm_; }

  /// g(ρ) on the unit ball.
  double bump(double rho) const {
    if (!(rho < 1.0)) return 0.0;
    return norm_ * std::exp(-1.0 / (1.0 - rho * rho));
  }

  /// g_n(r).
  double operator()(double r) const { return std::pow(static_cast<double>(n_), d_) * bump(n_ * r); }

  double sup() const { return (*this)(0.0); }
  double support_radius() const { return 1.0 / n_; }

  /// ∫_{a<|x|<b} g_n dx.
  double shell_mass(double a, double b) const {
    a = std::max(a, 0.0) * n_;
    b = std::min(b * n_, 1.0);
    if (!(b > a)) return 0.0;
    return sphere_area(d_) * norm_ * integrate_shape(a, b, [](double) { return 1.0; });
  }

 private:
  // ∫_a^b e^{−1/(1−ρ²)} ρ^{d−1} w(ρ) dρ by composite Gauss-Legendre.
  template <class W>
  double integrate_shape(double a, double b, W&& w) const {
    static const GaussLegendre rule(20);
    constexpr int panels = 16;
    double s = 0.0;
    const double h = (b - a) / panels;
    for (int k = 0; k < panels; ++k) {
      s += rule.integrate(
          [&](double rho) {
            if (!(rho < 1.0)) return 0.0;
            return std::exp(-1.0 / (1.0 - rho * rho)) * std::pow(rho, d_ - 1) * w(rho);
          },
          a + k * h, a + (k + 1) * h);
    }
    return s;
  }

  int n_;
  int d_;
  double norm_ = 0.0;
};

/// α g_n(r); zero outside the ball of radius 1/n.
inline double mollified_source(double r, const Mollifier& moll, double alpha, int d) {
  if (!(r >= 0.0)) throw DomainError("mollified_source: r must be >= 0");
  if (d != moll.d()) throw DomainError("mollified_source: dimension does not match the mollifier");
  return alpha * moll(r);
}

/// Cell averages of g_n over the finite-volume cells of the grid; Σ V_i S_i = 1.
inline std::vector<double> cell_averaged_source(const RadialGrid& g, const Mollifier& moll) {
  std::vector<double> s(g.size(), 0.0);
  double inner = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double outer = (i + 1 < g.size()) ? 0.5 * (g.r[i] + g.r[i + 1]) : g.r[i];
    if (inner >= moll.support_radius()) break;
    s[i] = moll.shell_mass(inner, outer) / g.volume[i];
    inner = outer;
  }
  return s;
}

/// f_n(u): 0 for u < 0, u^p on [0, ū], ū^p above.
struct TruncatedNonlinearity {
  double p = 2.0;
  double ubar = 1.0;

  double operator()(double u) const {
    if (u <= 0.0) return 0.0;
    return std::pow(std::min(u, ubar), p);
  }
  /// One-sided derivative used in the linearization (0 at and above ū).
  double derivative(double u) const {
    if (u <= 0.0 || u >= ubar) return 0.0;
    return p * std::pow(u, p - 1.0);
  }
  /// f_n(u) and its one-sided derivative with a single pow.
  void evaluate(double u, double& value, double& slope) const {
    if (u <= 0.0) {
      value = slope = 0.0;
    } else if (u >= ubar) {
      value = std::pow(ubar, p);
      slope = 0.0;
    } else {
      const double up = std::pow(u, p - 1.0);
      value = up * u;
      slope = p * up;
    }
  }
};

/// ū_n = (α ‖g_n‖_∞)^{1/p}.
inline TruncatedNonlinearity make_truncation(const ModelParams& m, const Mollifier& moll) {
  return {m.p, std::pow(m.alpha * moll.sup(), 1.0 / m.p)};
}

/// Discrete operator (A u)_i = [κ_{i+½}(u_i − u_{i+1}) + κ_{i−½}(u_i − u_{i−1})]/V_i on
/// nodes 0..N−2 with u_{N−1} = 0; approximates −Δ_r u.
struct RadialOperator {
  std::vector<double> lower, diag, upper;

  explicit RadialOperator(const RadialGrid& g) {
    const std::size_t m = g.size() - 1;
    lower.assign(m, 0.0);
    diag.assign(m, 0.0);
    upper.assign(m, 0.0);
    for (std::size_t i = 0; i < m; ++i) {
      const double right = g.conductance[i] / g.volume[i];
      const double left = (i > 0) ? g.conductance[i - 1] / g.volume[i] : 0.0;
      diag[i] = left + right;
      if (i > 0) lower[i] = -left;
      if (i + 1 < m) upper[i] = -right;
    }
  }

  std::size_t size() const noexcept { return diag.size(); }

  double apply_row(std::span<const double> u, std::size_t i) const {
    double s = diag[i] * u[i];
    if (i > 0) s += lower[i] * u[i - 1];
    if (i + 1 < size()) s += upper[i] * u[i + 1];
    return s;
  }
};

}  // namespace selfsim
