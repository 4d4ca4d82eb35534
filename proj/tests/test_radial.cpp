#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "oracles.hpp"
#include "selfsim/radial.hpp"

using namespace selfsim;

TEST(Mollifier, UnitMass) {
  for (int d : {2, 3, 4}) {
    for (int n : {1, 16, 64}) {
      const Mollifier g(n, d);
      const double a = g.support_radius();
      const double mass = oracle::adaptive_gk15(
          [&](double r) { return sphere_area(d) * std::pow(r, d - 1) * g(r); }, 0.0, a, 1e-13);
      EXPECT_NEAR(mass, 1.0, 1e-8) << "d=" << d << " n=" << n;
      EXPECT_NEAR(g.shell_mass(0.0, a), 1.0, 1e-8);
      EXPECT_NEAR(g.shell_mass(0.0, 0.4 * a) + g.shell_mass(0.4 * a, 2.0 * a), 1.0, 1e-12);
    }
  }
}

TEST(Mollifier, SupportAndShape) {
  const Mollifier g(16, 2);
  EXPECT_EQ(g(1.0 / 16.0), 0.0);
  EXPECT_EQ(g(0.07), 0.0);
  EXPECT_GT(g(0.0624), 0.0);
  EXPECT_EQ(g.sup(), g(0.0));
  EXPECT_NEAR(g.sup(), 256.0 * g.normalization() * std::exp(-1.0), 1e-12 * g.sup());
  for (double r = 0.0; r < 0.0625; r += 0.001) EXPECT_GE(g(r), g(r + 0.001));
  EXPECT_THROW(Mollifier(0, 2), DomainError);
  EXPECT_THROW(Mollifier(4, 1), DomainError);
}

TEST(Source, ZeroOutsideSupport) {
  const Mollifier g(16, 3);
  EXPECT_EQ(mollified_source(0.0625, g, 2.0, 3), 0.0);
  EXPECT_EQ(mollified_source(5.0, g, 2.0, 3), 0.0);
  EXPECT_DOUBLE_EQ(mollified_source(0.01, g, 2.0, 3), 2.0 * g(0.01));
  EXPECT_THROW(mollified_source(-0.1, g, 1.0, 3), DomainError);
  EXPECT_THROW(mollified_source(0.1, g, 1.0, 2), DomainError);
}

TEST(Source, CellAveragesKeepMass) {
  for (int d : {2, 3}) {
    const Mollifier g(16, d);
    const auto grid = make_radial_grid(d, 40.0, 1025, 1.0 / 256.0);
    const auto s = cell_averaged_source(grid, g);
    double mass = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      mass += grid.volume[i] * s[i];
      if (i > 0 && grid.r[i - 1] > 0.0625) EXPECT_EQ(s[i], 0.0);
    }
    EXPECT_NEAR(mass, 1.0, 1e-10) << "d=" << d;
  }
}

TEST(Truncation, CapAndDerivative) {
  const ModelParams m{2, 2.0, 1.0};
  const Mollifier g(16, 2);
  const auto f = make_truncation(m, g);
  EXPECT_NEAR(std::pow(f.ubar, 2.0), g.sup(), 1e-12 * g.sup());
  EXPECT_EQ(f(-1.0), 0.0);
  EXPECT_EQ(f(0.0), 0.0);
  EXPECT_DOUBLE_EQ(f(0.5 * f.ubar), 0.25 * f.ubar * f.ubar);
  EXPECT_DOUBLE_EQ(f(3.0 * f.ubar), f.ubar * f.ubar);
  EXPECT_EQ(f.derivative(2.0 * f.ubar), 0.0);
  EXPECT_EQ(f.derivative(-0.5), 0.0);
  EXPECT_DOUBLE_EQ(f.derivative(0.5 * f.ubar), f.ubar);
  double v = 0.0, s = 0.0;
  for (double u : {-1.0, 0.3, 0.9 * f.ubar, 2.0 * f.ubar}) {
    f.evaluate(u, v, s);
    EXPECT_DOUBLE_EQ(v, f(u));
    EXPECT_DOUBLE_EQ(s, f.derivative(u));
  }
  // Monotone and globally Lipschitz with constant p ū^{p−1}.
  const double lip = 2.0 * f.ubar;
  for (double u = -1.0; u < 2.0 * f.ubar; u += 0.01) {
    EXPECT_LE(f(u), f(u + 0.01));
    EXPECT_LE(f(u + 0.01) - f(u), lip * 0.01 + 1e-12);
  }
}

TEST(RadialGridTest, Invariants) {
  const auto g = make_radial_grid(3, 400.0, 4096, 1.0 / 256.0);
  EXPECT_EQ(g.size(), 4096u);
  EXPECT_EQ(g.r.front(), 0.0);
  EXPECT_EQ(g.r.back(), 400.0);
  // sinh x ≥ x makes the first cell marginally wider than the linearized target.
  EXPECT_NEAR(g.spacing(0), 1.0 / 256.0, 1e-6 / 256.0);
  double vol = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    EXPECT_GT(g.spacing(i), 0.0);
    if (i > 0) EXPECT_GE(g.spacing(i), g.spacing(i - 1) * (1.0 - 1e-12));
  }
  for (double v : g.volume) vol += v;
  EXPECT_NEAR(vol, 4.0 / 3.0 * std::numbers::pi * std::pow(400.0, 3), 1e-10 * std::pow(400.0, 3));
  EXPECT_THROW(make_radial_grid(1, 10.0, 100, 0.01), DomainError);
  EXPECT_THROW(make_radial_grid(2, -1.0, 100, 0.01), DomainError);
  EXPECT_THROW(make_radial_grid(2, 10.0, 3, 0.01), DomainError);
  EXPECT_THROW(make_radial_grid(2, 10.0, 100, 0.0), DomainError);
}

TEST(RadialGridTest, CoarseRequestIsUniform) {
  const auto g = make_radial_grid(2, 10.0, 11, 5.0);
  for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(g.r[i], static_cast<double>(i), 1e-12);
}

TEST(RadialGridTest, RefinementNests) {
  const auto g = make_radial_grid(2, 100.0, 513, 1.0 / 64.0);
  const auto f = refine(g);
  ASSERT_EQ(f.size(), 1025u);
  for (std::size_t j = 0; j < g.size(); ++j) EXPECT_EQ(f.r[2 * j], g.r[j]);
  EXPECT_NEAR(f.spacing(0), 0.5 * g.spacing(0), 1e-4 * g.spacing(0));
}

TEST(Interpolation, ExactOnCubics) {
  const auto g = make_radial_grid(2, 10.0, 200, 0.01);
  std::vector<double> u(g.size());
  auto poly = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x - 0.03 * x * x * x; };
  for (std::size_t i = 0; i < g.size(); ++i) u[i] = poly(g.r[i]);
  for (double x : {0.0, 0.003, 0.5, 3.3, 9.99, 10.0}) EXPECT_NEAR(interpolate_local(g.r, u, x), poly(x), 1e-10);
}

TEST(Operator, ExactOnQuadratics) {
  // u = R² − r² satisfies −Δu = 2d; midpoint faces make the flux form reproduce it exactly.
  for (int d : {2, 3, 5}) {
    const auto g = make_radial_grid(d, 30.0, 300, 0.01);
    const RadialOperator A(g);
    std::vector<double> u(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) u[i] = 900.0 - g.r[i] * g.r[i];
    u.back() = 0.0;
    for (std::size_t i = 0; i < A.size(); ++i) EXPECT_NEAR(A.apply_row(u, i), 2.0 * d, 1e-8 * 900.0) << i;
  }
}

TEST(Operator, SymmetricInVolumeInnerProduct) {
  const auto g = make_radial_grid(3, 20.0, 100, 0.05);
  const RadialOperator A(g);
  for (std::size_t i = 0; i + 1 < A.size(); ++i)
    EXPECT_NEAR(g.volume[i] * A.upper[i], g.volume[i + 1] * A.lower[i + 1], 1e-12 * g.volume[i] * std::fabs(A.upper[i]));
  for (std::size_t i = 0; i < A.size(); ++i) EXPECT_GT(A.diag[i], 0.0);
}
