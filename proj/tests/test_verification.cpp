#include <gtest/gtest.h>

#include <cmath>

#include "nsk/verification.hpp"

using namespace nsk;

namespace {

Model ideal() { return Model(PhysParams{}, std::make_shared<IdealGas>(1.0)); }

EnsembleSpec small_ensemble(int samples) {
  EnsembleSpec e;
  e.samples = samples;
  return e;
}

LedgerRow row_inside_bounds(const EnergyCoeffs& k, double t, double norm, double N_fraction, double diss) {
  LedgerRow r;
  r.t = t;
  r.h433 = norm;
  const auto [lo, hi] = energy_bounds(k, norm);
  r.N = lo + N_fraction * (hi - lo);
  r.dissipation = diss;
  return r;
}

}  // namespace

TEST(Audit, FinalizeFlagsNonPositiveRatios) {
  InequalityAudit a;
  add_sample(a, 1.0, 2.0);
  add_sample(a, 0.0, 1.0);
  finalize(a);
  EXPECT_FALSE(a.pass);
  InequalityAudit b;
  add_sample(b, 1.0, 2.0);
  add_sample(b, 3.0, 2.0);
  finalize(b);
  EXPECT_TRUE(b.pass);
  EXPECT_DOUBLE_EQ(b.fitted_constant, 1.5);
  EXPECT_DOUBLE_EQ(b.min_ratio, 0.5);
}

TEST(LinearAudit, RatiosFiniteAndScaleInvariant) {
  const auto a = audit_linear_estimate(small_ensemble(4), 0.1, ideal());
  EXPECT_TRUE(a.pass);
  EXPECT_EQ(a.samples, 4);
  EXPECT_LT(a.scale_defect, 1e-10);
  EXPECT_GT(a.min_ratio, 0.0);
}

TEST(LinearAudit, RejectsRegularizationOutsideUnitInterval) {
  EXPECT_THROW(audit_linear_estimate(small_ensemble(1), 0.0, ideal()), Error);
  EXPECT_THROW(audit_linear_estimate(small_ensemble(1), 1.0, ideal()), Error);
}

TEST(LinearAudit, SampleIndependentOfEnsembleSize) {
  const auto a = audit_linear_estimate(small_ensemble(2), 0.5, ideal());
  const auto b = audit_linear_estimate(small_ensemble(3), 0.5, ideal());
  EXPECT_EQ(a.lhs[1], b.lhs[1]);
  EXPECT_EQ(a.rhs[1], b.rhs[1]);
}

TEST(LinearAudit, ScaledConstantsStableAcrossEps) {
  const auto s = audit_linear_sweep(small_ensemble(6), ideal());
  ASSERT_EQ(s.audits.size(), 3u);
  EXPECT_TRUE(s.pass) << "spread " << s.spread;
}

TEST(IterationAudit, ZeroDataGivesZeroSolution) {
  const Model m = ideal();
  const EnsembleSpec e = small_ensemble(1);
  const auto g = e.grid();
  const auto t = apply_T(StationaryState::zero(g, m), ForcingData::zero(g), m);
  EXPECT_EQ(t.state.sigma.max_abs(), 0.0);
  EXPECT_EQ(t.state.v.max_abs(), 0.0);
  EXPECT_EQ(t.state.theta.max_abs(), 0.0);
}

TEST(IterationAudit, BoundedAndScaleInvariant) {
  const auto r = audit_iteration_estimates(small_ensemble(2), ideal());
  for (const auto* a : {&r.local, &r.global, &r.linf}) {
    EXPECT_TRUE(a->pass) << a->id;
    EXPECT_LT(a->scale_defect, 1e-4) << a->id;
    EXPECT_LT(a->max_ratio / a->min_ratio, 3.0) << a->id;
  }
}

TEST(RegularizationAudit, ZeroDataGivesZeroGaps) {
  const EnsembleSpec e = small_ensemble(1);
  const auto rep = audit_regularization_limit(ForcingData::zero(e.grid()), ideal());
  for (double x : rep.gap) EXPECT_EQ(x, 0.0);
  EXPECT_EQ(rep.limit_norm, 0.0);
}

TEST(RegularizationAudit, GapShrinksLinearlyToLimit) {
  const EnsembleSpec e = small_ensemble(1);
  const auto rep = audit_regularization_limit(small_forcing(e), ideal());
  EXPECT_TRUE(rep.pass);
  EXPECT_TRUE(rep.monotone);
  ASSERT_EQ(rep.gap.size(), 4u);
  // first order in eps once eps is below the smallest symbol
  EXPECT_NEAR(rep.gap[2] / rep.gap[3], 10.0, 0.5);
  EXPECT_LT(rep.gap.back(), 1e-6);
}

TEST(DecayAudit, ZeroRunPasses) {
  EnergyLedger L;
  L.coeffs = energy_coeffs(ideal());
  for (int i = 0; i < 3; ++i) L.rows.push_back(LedgerRow{0.1 * i});
  const auto d = audit_decay(L);
  EXPECT_TRUE(d.pass);
}

TEST(DecayAudit, DetectsEnergyIncrease) {
  EnergyLedger L;
  L.coeffs = energy_coeffs(ideal());
  L.rows.push_back(row_inside_bounds(L.coeffs, 0.0, 1e-3, 0.5, 0.0));
  L.rows.push_back(row_inside_bounds(L.coeffs, 0.1, 1e-3, 0.6, 1e-8));
  const auto d = audit_decay(L);
  EXPECT_FALSE(d.monotone);
  EXPECT_FALSE(d.pass);
  EXPECT_GT(d.worst_increase, 0.0);
}

TEST(DecayAudit, FittedConstantFromColumns) {
  EnergyLedger L;
  L.coeffs = energy_coeffs(ideal());
  L.rows.push_back(row_inside_bounds(L.coeffs, 0.0, 1e-3, 0.5, 0.0));
  L.rows.push_back(row_inside_bounds(L.coeffs, 0.1, 0.5e-3, 0.5, 1e-6));
  const auto d = audit_decay(L);
  EXPECT_TRUE(d.pass);
  EXPECT_NEAR(d.estimate.fitted_constant, 1.25, 1e-12);
}

TEST(DecayAudit, SweepVariation) {
  EnergyLedger a, b;
  a.coeffs = b.coeffs = energy_coeffs(ideal());
  a.rows.push_back(row_inside_bounds(a.coeffs, 0.0, 1e-3, 0.5, 0.0));
  a.rows.push_back(row_inside_bounds(a.coeffs, 0.1, 1e-3, 0.4, 1e-7));
  b.rows.push_back(row_inside_bounds(b.coeffs, 0.0, 1e-3, 0.5, 0.0));
  b.rows.push_back(row_inside_bounds(b.coeffs, 0.1, 1e-3, 0.4, 5e-7));
  EXPECT_TRUE(audit_decay_sweep({a, a}).pass);
  const auto s = audit_decay_sweep({a, b});
  EXPECT_NEAR(s.variation, 1.5 / 1.1 - 1.0, 1e-12);
  EXPECT_FALSE(s.pass);
}
