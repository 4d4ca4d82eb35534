#pragma once

// Small numerical kernels shared by the solvers: banded solves, shape-preserving
// interpolation, Gauss-Legendre rules and second-order jets.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "selfsim/errors.hpp"

namespace selfsim {

/// Tridiagonal matrix; lower[i] multiplies x[i−1] in row i, upper[i] multiplies x[i+1].
struct Tridiagonal {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  explicit Tridiagonal(std::size_t n = 0) : lower(n, 0.0), diag(n, 0.0), upper(n, 0.0) {}
  std::size_t size() const noexcept { return diag.size(); }

  std::vector<double> apply(std::span<const double> x) const {
    const std::size_t n = size();
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double s = diag[i] * x[i];
      if (i > 0) s += lower[i] * x[i - 1];
      if (i + 1 < n) s += upper[i] * x[i + 1];
      y[i] = s;
    }
    return y;
  }
};

/// Gaussian elimination with partial pivoting (the LAPACK gtsv scheme).
inline std::vector<double> solve_tridiagonal(Tridiagonal a, std::vector<double> b) {
  const std::size_t n = a.size();
  if (b.size() != n) throw std::invalid_argument("solve_tridiagonal: size mismatch");
  if (n == 0) return b;
  if (n == 1) {
    if (a.diag[0] == 0.0) throw SolverError("numerics", "singular tridiagonal system");
    b[0] /= a.diag[0];
    return b;
  }
  // dl[i] = A(i+1, i), du[i] = A(i, i+1); du2 reuses dl storage after elimination.
  std::vector<double>& d = a.diag;
  std::vector<double> dl(n - 1), du(n - 1), du2(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    dl[i] = a.lower[i + 1];
    du[i] = a.upper[i];
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (std::fabs(d[i]) >= std::fabs(dl[i])) {
      if (d[i] == 0.0) throw SolverError("numerics", "singular tridiagonal system");
      const double fact = dl[i] / d[i];
      d[i + 1] -= fact * du[i];
      b[i + 1] -= fact * b[i];
      du2[i] = 0.0;
    } else {
      const double fact = d[i] / dl[i];
      d[i] = dl[i];
      const double temp = d[i + 1];
      d[i + 1] = du[i] - fact * temp;
      if (i + 2 < n) {
        du2[i] = du[i + 1];
        du[i + 1] = -fact * du2[i];
      }
      du[i] = temp;
      const double tb = b[i];
      b[i] = b[i + 1];
      b[i + 1] = tb - fact * b[i + 1];
    }
  }
  if (d[n - 1] == 0.0) throw SolverError("numerics", "singular tridiagonal system");
  b[n - 1] /= d[n - 1];
  b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
  for (std::size_t k = n - 2; k-- > 0;) {
    b[k] = (b[k] - du[k] * b[k + 1] - du2[k] * b[k + 2]) / d[k];
  }
  return b;
}

/// LDLᵀ solve of a symmetric tridiagonal system; nullopt if a pivot is not positive.
inline std::optional<std::vector<double>> solve_spd_tridiagonal(std::span<const double> diag,
                                                                std::span<const double> off,
                                                                std::vector<double> b) {
  const std::size_t n = diag.size();
  std::vector<double> piv(n), l(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double di = diag[i];
    if (i > 0) {
      l[i] = off[i - 1] / piv[i - 1];
      di -= l[i] * off[i - 1];
    }
    if (!(di > 0.0) || !std::isfinite(di)) return std::nullopt;
    piv[i] = di;
  }
  for (std::size_t i = 1; i < n; ++i) b[i] -= l[i] * b[i - 1];
  for (std::size_t i = 0; i < n; ++i) b[i] /= piv[i];
  for (std::size_t k = n - 1; k-- > 0;) b[k] -= l[k + 1] * b[k + 1];
  return b;
}

inline double hermite_cubic(double x0, double x1, double y0, double y1, double d0, double d1, double x) {
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s2 = s * s;
  const double s3 = s2 * s;
  return (2 * s3 - 3 * s2 + 1) * y0 + (s3 - 2 * s2 + s) * h * d0 + (-2 * s3 + 3 * s2) * y1 +
         (s3 - s2) * h * d1;
}

inline double hermite_cubic_derivative(double x0, double x1, double y0, double y1, double d0, double d1,
                                       double x) {
  const double h = x1 - x0;
  const double s = (x - x0) / h;
  const double s2 = s * s;
  return ((6 * s2 - 6 * s) * y0 + (3 * s2 - 4 * s + 1) * h * d0 + (-6 * s2 + 6 * s) * y1 +
          (3 * s2 - 2 * s) * h * d1) /
         h;
}

/// Index k with x[k] <= xq < x[k+1], clamped to [0, n−2].
inline std::size_t bracket_index(std::span<const double> x, double xq) {
  auto it = std::upper_bound(x.begin(), x.end(), xq);
  std::size_t k = (it == x.begin()) ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
  return std::min(k, x.size() - 2);
}

/// Monotone piecewise-cubic (Fritsch-Carlson / PCHIP) interpolant.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2 || y_.size() != n) throw std::invalid_argument("MonotoneCubic: need >= 2 matching points");
    d_.assign(n, 0.0);
    std::vector<double> h(n - 1), delta(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      h[k] = x_[k + 1] - x_[k];
      if (!(h[k] > 0.0)) throw std::invalid_argument("MonotoneCubic: abscissae must increase");
      delta[k] = (y_[k + 1] - y_[k]) / h[k];
    }
    if (n == 2) {
      d_[0] = d_[1] = delta[0];
      return;
    }
    for (std::size_t k = 1; k + 1 < n; ++k) {
      if (delta[k - 1] * delta[k] > 0.0) {
        const double w1 = 2 * h[k] + h[k - 1];
        const double w2 = h[k] + 2 * h[k - 1];
        d_[k] = (w1 + w2) / (w1 / delta[k - 1] + w2 / delta[k]);
      }
    }
    d_[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    d_[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
  }

  double operator()(double xq) const {
    const std::size_t k = bracket_index(x_, xq);
    return hermite_cubic(x_[k], x_[k + 1], y_[k], y_[k + 1], d_[k], d_[k + 1], xq);
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

 private:
  static double end_slope(double h0, double h1, double m0, double m1) {
    double d = ((2 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
    if (d * m0 <= 0.0) return 0.0;
    if (m0 * m1 <= 0.0 && std::fabs(d) > std::fabs(3 * m0)) return 3 * m0;
    return d;
  }

  std::vector<double> x_, y_, d_;
};

/// Gauss-Legendre nodes and weights on [−1, 1].
struct GaussLegendre {
  std::vector<double> nodes;
  std::vector<double> weights;

  explicit GaussLegendre(int n) : nodes(n), weights(n) {
    for (int i = 0; i < n; ++i) {
      double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
      double dp = 0.0;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1.0, p1 = x;
        for (int k = 2; k <= n; ++k) {
          const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        const double dx = p1 / dp;
        x -= dx;
        if (std::fabs(dx) < 1e-16) break;
      }
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      nodes[i] = x;
      weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
  }

  template <class F>
  double integrate(F&& f, double a, double b) const {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) s += weights[i] * f(mid + half * nodes[i]);
    return s * half;
  }
};

/// Value with first and second derivative, for exact derivatives of smooth test functions.
struct Jet {
  double f = 0.0;
  double d1 = 0.0;
  double d2 = 0.0;

  static Jet variable(double x) { return {x, 1.0, 0.0}; }
  static Jet constant(double c) { return {c, 0.0, 0.0}; }
};

inline Jet operator+(Jet a, Jet b) { return {a.f + b.f, a.d1 + b.d1, a.d2 + b.d2}; }
inline Jet operator-(Jet a, Jet b) { return {a.f - b.f, a.d1 - b.d1, a.d2 - b.d2}; }
inline Jet operator*(Jet a, Jet b) { return {a.f * b.f, a.d1 * b.f + a.f * b.d1, a.d2 * b.f + 2 * a.d1 * b.d1 + a.f * b.d2}; }
inline Jet operator*(double c, Jet a) { return {c * a.f, c * a.d1, c * a.d2}; }
inline Jet reciprocal(Jet a) {
  const double inv = 1.0 / a.f;
  return {inv, -a.d1 * inv * inv, (2 * a.d1 * a.d1 * inv - a.d2) * inv * inv};
}
inline Jet operator/(Jet a, Jet b) { return a * reciprocal(b); }
inline Jet exp(Jet a) {
  const double e = std::exp(a.f);
  return {e, e * a.d1, e * (a.d2 + a.d1 * a.d1)};
}

/// C^∞ step: 0 for x ≤ 0, 1 for x ≥ 1, built from e^{−1/x}.
inline Jet smooth_step(Jet x) {
  auto h = [](Jet s) -> Jet {
    if (s.f <= 0.0) return Jet{};
    return exp(-1.0 * reciprocal(s));
  };
  if (x.f <= 0.0) return Jet{};
  if (x.f >= 1.0) return Jet::constant(1.0);
  const Jet a = h(x);
  const Jet b = h(Jet::constant(1.0) - x);
  return a / (a + b);
}

}  // namespace selfsim
