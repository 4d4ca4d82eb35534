#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "selfsim/profile.hpp"
#include "selfsim/stationary.hpp"

using namespace selfsim;

namespace {

const ModelParams kRef{2, 2.0, 1.0};

StationaryField reference(double alpha = 1.0) {
  const ModelParams m{2, 2.0, alpha};
  return solve_stationary(m, make_radial_grid(2, 400.0, 4096, 1.0 / 256.0), Mollifier(16, 2));
}

}  // namespace

TEST(Stationary, ZeroSourceGivesZero) {
  const auto s = reference(0.0);
  for (double v : s.values) EXPECT_EQ(v, 0.0);
}

TEST(Stationary, ReferenceInvariants) {
  const auto s = reference();
  EXPECT_LE(s.residual, 1e-12);
  EXPECT_FALSE(s.continuation);
  EXPECT_FALSE(stationary_invariant_violation(s).has_value());
  EXPECT_EQ(s.values.back(), 0.0);
  // Frozen from the reference run.
  EXPECT_NEAR(s.at(1.0), 0.18588737, 1e-7);
  EXPECT_GT(s.fitted_C, 0.0);
  EXPECT_LE(s.fitted_C, singular_amplitude_c(2.0, 2));
}

TEST(Stationary, NearSourceBehavesLikeFundamentalSolution) {
  const int n = 256;
  const ModelParams m{3, 2.0, 1.0};
  const auto s = solve_stationary(m, make_radial_grid(3, 400.0, 4096, 1.0 / (16.0 * n)), Mollifier(n, 3));
  for (std::size_t i = 1; i < s.grid.size(); ++i) {
    const double r = s.grid.r[i];
    if (r < 4.0 / n || r > 0.05) continue;
    const double q = s.values[i] / fundamental_solution_phi(r, 3);
    EXPECT_GE(q, 0.9) << r;
    EXPECT_LE(q, 1.1) << r;
  }
}

TEST(Stationary, MonotoneInAlpha) {
  const auto a = reference(0.5), b = reference(1.0), c = reference(2.0);
  for (std::size_t i = 0; i + 1 < a.values.size(); ++i) {
    EXPECT_LT(a.values[i], b.values[i]);
    EXPECT_LT(b.values[i], c.values[i]);
    EXPECT_LE(c.values[i], i > 0 ? v_infinity(a.grid.r[i], kRef) : INFINITY);
  }
}

TEST(Stationary, RejectsMismatchedDimensions) {
  EXPECT_THROW(solve_stationary(kRef, make_radial_grid(3, 10.0, 100, 0.01), Mollifier(16, 2)), DomainError);
  EXPECT_THROW(solve_stationary(kRef, make_radial_grid(2, 10.0, 100, 0.01), Mollifier(16, 3)), DomainError);
}

TEST(Subsolution, ClosedFormB) {
  // c(2,2) = 4: b = R^{−γ}((2c/v_R)^{(p−1)/2} − R) = 2 − 1 for R = 1, v_R = 2.
  for (double g : {0.1, 0.5, 0.9}) EXPECT_NEAR(subsolution_b(1.0, 2.0, kRef, g), 1.0, 1e-14);
}

TEST(Subsolution, HalfValueAtR) {
  for (const ModelParams& m : {ModelParams{2, 2.0, 1.0}, ModelParams{3, 2.5, 1.0}, ModelParams{2, 4.0, 3.0}}) {
    for (double R : {0.5, 1.0, 2.0}) {
      const double vR = 0.3 * v_infinity(R, m);
      const auto s = choose_subsolution_params(R, vR, m);
      EXPECT_NEAR(subsolution_v0(R, m, s), 0.5 * vR, 1e-12 * vR);
      EXPECT_EQ(s.gamma, gamma_thresholds(m.p, m.d).gamma_bar);
      EXPECT_GT(s.b, 0.0);
    }
  }
}

TEST(Subsolution, InfeasibleDataThrow) {
  EXPECT_THROW(choose_subsolution_params(1.0, v_infinity(1.0, kRef), kRef), DomainError);
  EXPECT_THROW(choose_subsolution_params(1.0, 2.0 * v_infinity(1.0, kRef), kRef), DomainError);
  EXPECT_THROW(choose_subsolution_params(1.0, 0.0, kRef), DomainError);
  EXPECT_THROW(choose_subsolution_params(0.0, 1.0, kRef), DomainError);
}

TEST(Subsolution, ParabolicShape) {
  const Profile pr = solve_profile_collocation(kRef, default_zeta_grid(kRef));
  const auto pc = plateau_constants(pr);
  const double lim = parabolic_delta_limit(kRef, pc);
  EXPECT_GT(lim, 0.0);
  EXPECT_LE(lim, 1.0);
  const auto s = choose_parabolic_subsolution_params(1.0, 0.18588737, kRef, pc);
  EXPECT_GE(s.gamma, gamma_thresholds(2.0, 2).gamma_bar);
  EXPECT_LT(s.gamma, 1.0);
  EXPECT_NEAR(s.gamma, 1.0 - 0.5 * lim, 1e-14);
  // Frozen from the reference run.
  EXPECT_NEAR(s.gamma, 0.782871, 1e-6);
  EXPECT_NEAR(s.b, 5.56024, 1e-5);
  EXPECT_NEAR(subsolution_v0(1.0, kRef, s), 0.5 * 0.18588737, 1e-12);
}

TEST(Subsolution, SandwichesStationarySolution) {
  const auto st = reference();
  const double vR = st.at(1.0);
  const auto s = choose_subsolution_params(1.0, vR, kRef);
  for (std::size_t i = 1; i + 1 < st.grid.size(); ++i) {
    const double r = st.grid.r[i];
    EXPECT_LE(st.values[i], v_infinity(r, kRef));
    if (r >= 1.0 && r <= 100.0) EXPECT_LE(subsolution_v0(r, kRef, s), st.values[i]);
  }
}
