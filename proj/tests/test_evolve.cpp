#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "selfsim/evolve.hpp"

using namespace selfsim;

namespace {

// Small but fully resolved setting: 16 nodes across the mollifier support.
struct Small {
  ModelParams m;
  Mollifier moll;
  RadialGrid grid;
  Small(int d, double p, double alpha, double r_out = 20.0, std::size_t n = 1025)
      : m{d, p, alpha}, moll(16, d), grid(make_radial_grid(d, r_out, n, 1.0 / 256.0)) {}
};

const TimeStepPolicy kPolicy{1e-6, 1.05, 1e-3};

EvolutionTrace run(const Small& s, double t_end, std::vector<double> outputs, bool linear = false,
                   bool newton = false) {
  EvolveOptions o;
  o.linear_mode = linear;
  o.full_newton = newton;
  o.output_times = std::move(outputs);
  return evolve(s.m, s.grid, s.moll, t_end, kPolicy, o);
}

const EvolutionTrace& nonlinear3() {
  static const EvolutionTrace tr = [] { return run(Small(3, 2.0, 1.0), 1.0, {0.1, 0.25, 0.5}); }();
  return tr;
}
const EvolutionTrace& linear3() {
  static const EvolutionTrace tr = [] { return run(Small(3, 2.0, 1.0), 1.0, {0.1, 0.25, 0.5}, true); }();
  return tr;
}

}  // namespace

TEST(Evolve, ZeroSourceStaysZero) {
  const Small s(2, 2.0, 0.0);
  const auto tr = run(s, 2.0, {1.0});
  for (const auto& f : tr.fields)
    for (double v : f) EXPECT_EQ(v, 0.0);
  for (double v : tr.boundary_trace) EXPECT_EQ(v, 0.0);
}

TEST(Evolve, OutputTimesAreSortedAndDeduplicated) {
  const auto& tr = nonlinear3();
  ASSERT_EQ(tr.times.size(), 4u);
  EXPECT_EQ(tr.times.back(), 1.0);
  for (std::size_t k = 0; k + 1 < tr.times.size(); ++k) EXPECT_LT(tr.times[k], tr.times[k + 1]);
  EXPECT_NO_THROW(tr.field_at(0.25));
  EXPECT_THROW(tr.field_at(0.3), DomainError);
  const Small s(2, 2.0, 1.0);
  const auto t2 = run(s, 0.2, {0.2, 0.1, 0.1, 5.0, -1.0});
  ASSERT_EQ(t2.times.size(), 2u);
  EXPECT_EQ(t2.times[0], 0.1);
  EXPECT_EQ(t2.times[1], 0.2);
}

TEST(Evolve, InvariantsHold) {
  for (const EvolutionTrace* tr : {&nonlinear3(), &linear3()}) {
    EXPECT_GE(tr->min_value, 0.0);
    EXPECT_GE(tr->min_increment, -1e-10);
    EXPECT_LE(tr->max_flux_defect, 1e-8);
    if (!tr->linear_mode) EXPECT_LE(tr->max_value, tr->ubar);
    for (std::size_t k = 0; k + 1 < tr->boundary_trace.size(); ++k)
      EXPECT_LE(tr->boundary_trace[k], tr->boundary_trace[k + 1] + 1e-14);
    for (std::size_t k = 0; k + 1 < tr->fields.size(); ++k)
      for (std::size_t i = 0; i < tr->grid.size(); ++i) EXPECT_LE(tr->fields[k][i], tr->fields[k + 1][i] + 1e-14);
    // Radially non-increasing profile.
    const auto& u = tr->fields.back();
    for (std::size_t i = 0; i + 1 < u.size(); ++i) EXPECT_GE(u[i] + 1e-14, u[i + 1]);
    EXPECT_EQ(u.back(), 0.0);
  }
}

TEST(Evolve, AbsorptionLowersTheSolution) {
  const auto& a = nonlinear3().fields.back();
  const auto& b = linear3().fields.back();
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_LE(a[i], b[i] + 1e-14);
  EXPECT_LT(a[0], b[0]);
}

TEST(Evolve, LinearUpperBound) {
  const auto nl = linear_upper_bound_check(nonlinear3(), 10.0);
  const auto li = linear_upper_bound_check(linear3(), 10.0);
  EXPECT_EQ(nl.violations, 0u);
  EXPECT_EQ(li.violations, 0u);
  EXPECT_GT(nl.checked, 0u);
  EXPECT_LE(nl.fitted_C_d, li.fitted_C_d);
  EXPECT_GT(nl.fitted_C_d, 0.0);
  const auto tight = linear_upper_bound_check(nonlinear3(), 0.5 * nl.fitted_C_d);
  EXPECT_GT(tight.violations, 0u);
}

TEST(Evolve, LinearModeMatchesConvolvedDuhamel) {
  // Measured 2.1e−5 against max I ≈ 0.22 on this grid.
  const auto& tr = linear3();
  const Mollifier moll(16, 3);
  double err = 0.0;
  for (std::size_t i = 0; i < tr.grid.size(); ++i) {
    const double r = tr.grid.r[i];
    if (r < 0.3 || r > 3.0) continue;
    err = std::max(err, std::fabs(tr.fields.back()[i] - oracle::convolved_I(r, 1.0, 3, moll)));
  }
  EXPECT_LE(err, 1e-4);
}

TEST(Evolve, FullNewtonAgreesWithLinearization) {
  const Small s(3, 2.0, 1.0);
  const auto a = run(s, 0.5, {}, false, true);
  const auto b = run(s, 0.5, {}, false, false);
  double diff = 0.0;
  for (std::size_t i = 0; i < a.grid.size(); ++i) diff = std::max(diff, std::fabs(a.fields[0][i] - b.fields[0][i]));
  EXPECT_LE(diff, 1e-7);
  EXPECT_EQ(a.newton_fallbacks, 0);
}

TEST(Evolve, SpatialOrderIsTwo) {
  for (int d : {2, 3}) {
    const ModelParams m{d, 2.0, 1.0};
    const Mollifier moll(64, d);
    RadialGrid g = make_radial_grid(d, 20.0, 257, 1.0 / 1024.0);
    std::vector<EvolutionTrace> tr;
    for (int l = 0; l < 3; ++l) {
      EvolveOptions o;
      o.linear_mode = true;
      tr.push_back(evolve(m, g, moll, 1.0, TimeStepPolicy{1e-3, 1.0, 1e-3}, o));
      g = refine(g);
    }
    double e1 = 0.0, e2 = 0.0;
    const auto& g0 = tr[0].grid;
    for (std::size_t i = 0; i < g0.size(); ++i) {
      if (g0.r[i] < 0.1 || g0.r[i] > 5.0) continue;
      const double a = tr[0].fields.back()[i], b = tr[1].fields.back()[2 * i], c = tr[2].fields.back()[4 * i];
      e1 = std::max(e1, std::fabs(a - b));
      e2 = std::max(e2, std::fabs(b - c));
    }
    EXPECT_GE(std::log2(e1 / e2), 1.8) << "d=" << d;
  }
}

TEST(Evolve, RejectsInvalidSetups) {
  const Small s(2, 2.0, 1.0);
  EvolveOptions o;
  EXPECT_THROW(evolve(s.m, s.grid, s.moll, 20.0, kPolicy, o), DomainError);  // R_out < 6 √t_end
  EXPECT_THROW(evolve(s.m, s.grid, s.moll, 0.0, kPolicy, o), DomainError);
  EXPECT_THROW(evolve(s.m, s.grid, Mollifier(16, 3), 1.0, kPolicy, o), DomainError);
  const auto coarse = make_radial_grid(2, 20.0, 65, 0.5);
  EXPECT_THROW(evolve(s.m, coarse, s.moll, 1.0, kPolicy, o), DomainError);
  EXPECT_THROW(evolve(s.m, s.grid, s.moll, 1.0, TimeStepPolicy{0.0, 1.05, 1e-3}, o), DomainError);
  EXPECT_THROW(evolve(s.m, s.grid, s.moll, 1.0, TimeStepPolicy{1e-3, 0.9, 1e-2}, o), DomainError);
  EXPECT_THROW(evolve(s.m, s.grid, s.moll, 1.0, TimeStepPolicy{1e-2, 1.05, 1e-3}, o), DomainError);
  o.probe_radius = 25.0;
  EXPECT_THROW(evolve(s.m, s.grid, s.moll, 1.0, kPolicy, o), DomainError);
  EXPECT_THROW(evolve(ModelParams{3, 3.0, 1.0}, make_radial_grid(3, 20.0, 1025, 1.0 / 256.0), Mollifier(16, 3), 1.0,
                      kPolicy, EvolveOptions{}),
               DomainError);
}
