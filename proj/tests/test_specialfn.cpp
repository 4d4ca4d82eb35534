#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "selfsim/specialfn.hpp"

using namespace selfsim;

TEST(UpperIncompleteGamma, ClosedFormValues) {
  EXPECT_NEAR(upper_incomplete_gamma(1.0, 0.0), 1.0, 1e-15);
  EXPECT_NEAR(upper_incomplete_gamma(0.5, 0.0), 1.7724538509055160, 1e-14);
  EXPECT_NEAR(upper_incomplete_gamma(0.0, 1.0), 0.21938393439552029, 1e-15);
  for (double x : {0.1, 1.0, 7.0}) EXPECT_NEAR(upper_incomplete_gamma(1.0, x) / std::exp(-x), 1.0, 1e-14);
  EXPECT_DOUBLE_EQ(exponential_integral_e1(1.0), upper_incomplete_gamma(0.0, 1.0));
}

TEST(UpperIncompleteGamma, DomainErrors) {
  EXPECT_THROW(upper_incomplete_gamma(1.0, -1.0), DomainError);
  EXPECT_THROW(upper_incomplete_gamma(0.0, 0.0), DomainError);
  EXPECT_THROW(upper_incomplete_gamma(-0.5, 1.0), DomainError);
}

TEST(UpperIncompleteGamma, MatchesQuadratureOracle) {
  for (double a : {0.0, 0.25, 0.5, 1.0, 1.5, 2.0, 3.3, 5.0})
    for (double x : {1e-12, 1e-6, 1e-3, 0.1, 0.9, 1.0, 1.1, 2.0, 4.5, 6.0, 12.0, 30.0, 50.0}) {
      const double ref = oracle::upper_gamma(a, x);
      EXPECT_NEAR(upper_incomplete_gamma(a, x) / ref, 1.0, 1e-10) << "a=" << a << " x=" << x;
    }
}

TEST(UpperIncompleteGamma, RecurrenceAndMonotonicity) {
  for (double a : {0.0, 0.5, 1.0, 2.5, 4.0})
    for (double x : {1e-8, 0.3, 1.0, 3.0, 10.0, 40.0}) {
      const double lhs = upper_incomplete_gamma(a + 1.0, x);
      const double rhs = a * upper_incomplete_gamma(a, x) + std::pow(x, a) * std::exp(-x);
      EXPECT_NEAR(lhs / rhs, 1.0, 1e-10) << "a=" << a << " x=" << x;
    }
  for (double a : {0.0, 0.5, 2.0}) {
    double prev = upper_incomplete_gamma(a, 1e-10);
    for (double x = 0.01; x < 50.0; x *= 1.3) {
      const double g = upper_incomplete_gamma(a, x);
      EXPECT_LT(g, prev);
      prev = g;
    }
  }
}

TEST(LinearSolution, BasicValues) {
  EXPECT_EQ(linear_solution_I(1.0, -1.0, 3, 1.0), 0.0);
  EXPECT_EQ(linear_solution_I(1.0, 0.0, 2, 1.0), 0.0);
  EXPECT_NEAR(linear_solution_I(1.0, kInfinity, 3, 1.0), 1.0 / (4.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(linear_solution_I(2.0, 1.0, 3, 1.0), std::erfc(1.0) / (8.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(linear_solution_I(2.0, 1.0, 3, 1.0) / oracle::duhamel_I(2.0, 1.0, 3, 1.0), 1.0, 1e-11);
  EXPECT_THROW(linear_solution_I(0.0, 1.0, 3, 1.0), DomainError);
  EXPECT_THROW(linear_solution_I(1.0, kInfinity, 2, 1.0), DomainError);
}

TEST(LinearSolution, MatchesDuhamelIntegral) {
  for (int d : {2, 3, 4, 5})
    for (double r : {0.05, 0.5, 1.0, 3.0})
      for (double t : {0.01, 0.5, 2.0, 40.0}) {
        const double ref = oracle::duhamel_I(r, t, d, 0.7);
        if (ref < 1e-250) continue;
        EXPECT_NEAR(linear_solution_I(r, t, d, 0.7) / ref, 1.0, 1e-10) << d << " " << r << " " << t;
      }
}

TEST(LinearSolution, MonotoneAndBounded) {
  for (int d : {3, 4, 5}) {
    const double phi = fundamental_solution_phi(1.0, d);
    double prev = 0.0;
    for (double t = 1.0; t <= 1e8; t *= 1.7) {
      const double I = linear_solution_I(1.0, t, d, 1.0);
      EXPECT_GE(I, prev);
      EXPECT_LE(I, phi);
      prev = I;
    }
    EXPECT_NEAR(linear_solution_I(1.0, kInfinity, d, 1.0) / phi, 1.0, 1e-12);
  }
  // d = 2: I(1,t) − ln(t)/(4π) stays bounded.
  double lo = 1e300, hi = -1e300;
  for (double t = 1.0; t <= 1e8; t *= 3.0) {
    const double gap = linear_solution_I(1.0, t, 2, 1.0) - std::log(t) / (4.0 * std::numbers::pi);
    lo = std::min(lo, gap);
    hi = std::max(hi, gap);
  }
  EXPECT_LT(hi - lo, 0.1);
}

TEST(LinearAsymptote, Branches) {
  for (double r : {0.1, 1.0, 4.0})
    for (double t : {0.3, 2.0})
      EXPECT_NEAR(linear_asymptote_I(r, t, 3, AsymptoteBranch::inner), 1.0 / (4.0 * std::numbers::pi * r), 1e-14);
  const double inner_ratio = linear_solution_I(1e-3, 1.0, 2, 1.0) / linear_asymptote_I(1e-3, 1.0, 2, AsymptoteBranch::inner);
  EXPECT_GT(inner_ratio, 0.9);
  EXPECT_LT(inner_ratio, 1.1);
  const double outer_ratio = linear_solution_I(20.0, 1.0, 3, 1.0) / linear_asymptote_I(20.0, 1.0, 3, AsymptoteBranch::outer);
  EXPECT_GT(outer_ratio, 0.9);
  EXPECT_LT(outer_ratio, 1.1);
  EXPECT_THROW(linear_asymptote_I(-1.0, 1.0, 3, AsymptoteBranch::inner), DomainError);
  EXPECT_THROW(linear_asymptote_I(1.0, 0.0, 3, AsymptoteBranch::outer), DomainError);
}
