#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nsk/model.hpp"
#include "nsk/random_fields.hpp"

using namespace nsk;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;

Model ideal(double cv = 1.5) {
  PhysParams p;
  p.c_v = cv;
  return Model(p, std::make_shared<IdealGas>(1.0));
}

}  // namespace

TEST(Eos, IdealGasAtUnitState) {
  const auto e = ideal().eval(1.0, 1.0);
  EXPECT_DOUBLE_EQ(e.rho, 1.0);
  EXPECT_DOUBLE_EQ(e.rho_P, 1.0);
  EXPECT_DOUBLE_EQ(e.rho_theta, -1.0);
}

TEST(Eos, IdealGasAtDoubledState) {
  PhysParams p;
  p.theta_bar = 2.0;
  const Model m(p, std::make_shared<IdealGas>(1.0));
  const auto e = m.eval(2.0, 2.0);
  EXPECT_NEAR(e.rho, 1.0, 1e-14);
  EXPECT_NEAR(e.rho_P, 0.5, 1e-14);
  EXPECT_NEAR(e.rho_theta, -0.5, 1e-14);
}

TEST(Eos, ReferenceStateConsistency) {
  PhysParams p;
  p.rho_bar = 1.3;
  p.theta_bar = 0.9;
  const Model m(p, std::make_shared<StiffenedGas>(1.0, 2.0, 0.5));
  EXPECT_NEAR(m.eval(m.p_bar(), p.theta_bar).rho, p.rho_bar, 1e-12);
}

TEST(Eos, DensityLeavingAdmissibleRangeThrows) {
  try {
    ideal().eval(10.0, 1.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::OutOfAdmissibleRange);
  }
}

TEST(Params, InvalidViscosityRejected) {
  PhysParams p;
  p.mu = -1.0;
  EXPECT_THROW(Model(p, std::make_shared<IdealGas>()), Error);
}

TEST(Coefficients, StationaryAtReference) {
  const Model m = ideal();
  EXPECT_DOUBLE_EQ(m.gamma1(), 1.0);
  EXPECT_DOUBLE_EQ(m.gamma2(), -1.0);
  const auto c = stationary_coeffs(m);
  EXPECT_DOUBLE_EQ(c.eta1(1, 1, 1, -1), 0.5);
  EXPECT_DOUBLE_EQ(c.eta2(1, 1, 1, -1), -1.0);
  EXPECT_DOUBLE_EQ(c.eta3(1, 1, 1, -1), -1.0);
  // Ideal gas: rho C_P with C_P = C_V + R.
  EXPECT_DOUBLE_EQ(c.energy_advection(1, 1, 1, -1), 2.5);
}

TEST(Coefficients, EvolutionAtReference) {
  const auto c = point_coeffs(ideal(), 1.0, 1.0);
  EXPECT_DOUBLE_EQ(c.A, 1.0);
  EXPECT_DOUBLE_EQ(c.B, 1.0);
  EXPECT_DOUBLE_EQ(c.D, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.E, 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(c.A_hat, 1.0);
  EXPECT_DOUBLE_EQ(c.A_tilde, 1.0);
  EXPECT_DOUBLE_EQ(c.B_tilde, 1.5);
}

TEST(Coefficients, SecantFactorsVanishForZeroPerturbation) {
  auto g = SpectralGrid::cube(8, kTwoPi);
  const ScalarField one(g, 1.0), zero(g);
  const auto f = secant_factors(ideal(), one, one, zero, zero);
  const auto dA = times(f.A1, zero) + times(f.A2, zero);
  EXPECT_EQ(dA.max_abs(), 0.0);
}

TEST(Coefficients, SecantIdentity) {
  auto g = SpectralGrid::cube(16, 20.0);
  const Model m(PhysParams{}, std::make_shared<StiffenedGas>(1.0, 0.5, 0.2));
  CounterRng rng(11);
  ScalarField rs = random_smooth(g, rng, 0.1, 2.0);
  rs += 1.0;
  ScalarField ts = random_smooth(g, rng, 0.1, 2.0);
  ts += 1.0;
  const ScalarField s = random_smooth(g, rng, 0.2, 2.0), t = random_smooth(g, rng, 0.2, 2.0);
  const auto f = secant_factors(m, rs, ts, s, t);
  double worst = 0.0;
  for (std::size_t i = 0; i < g->size(); ++i) {
    const auto a = point_coeffs(m, rs[i] + s[i], ts[i] + t[i]);
    const auto b = point_coeffs(m, rs[i], ts[i]);
    const double checks[4][2] = {{a.A - b.A, f.A1[i] * s[i] + f.A2[i] * t[i]},
                                 {a.B - b.B, f.B1[i] * s[i] + f.B2[i] * t[i]},
                                 {a.D - b.D, f.D1[i] * s[i]},
                                 {a.E - b.E, f.E1[i] * s[i] + f.E2[i] * t[i]}};
    for (const auto& c : checks) worst = std::max(worst, std::abs(c[0] - c[1]) / std::max(std::abs(c[0]), 1e-3));
  }
  EXPECT_LT(worst, 1e-10);
}

TEST(Stress, ConstantDensityHasNoKorteweg) {
  auto g = SpectralGrid::cube(8, kTwoPi);
  const auto k = korteweg_stress(ScalarField(g, 1.2), PhysParams{});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_LT(k(i, j).max_abs(), 1e-14);
}

TEST(Stress, KortewegDivergenceIdentity) {
  // div K = kappa rho grad(Lap rho) for band-limited rho.
  auto g = SpectralGrid::cube(32, 20.0);
  CounterRng rng(12);
  ScalarField rho = random_smooth(g, rng, 0.2, 2.0, true);
  rho += 1.0;
  PhysParams p;
  p.kappa = 0.7;
  const VectorField lhs = div(korteweg_stress(rho, p));
  const VectorField gl = grad_laplacian(rho);
  VectorField rhs(g);
  for (int i = 0; i < 3; ++i) rhs[i] = p.kappa * product(rho, gl[i]);
  EXPECT_LT(l2_norm(lhs - rhs) / l2_norm(rhs), 1e-9);
}

TEST(Stress, EnergyFormIdentity) {
  // div(S v) - v . div S = Psi - P div v; a band of N/6 keeps every product inside the dealiased band
  auto g = SpectralGrid::cube(32, 20.0);
  PhysParams p;
  p.mu = 0.9;
  p.mu_prime = 0.4;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    CounterRng rng(seed, 15);
    const VectorField raw = random_smooth_vector(g, rng, 0.3, 2.0);
    const VectorField v(band_limited(raw[0], 6), band_limited(raw[1], 6), band_limited(raw[2], 6));
    ScalarField P = band_limited(random_smooth(g, rng, 0.2, 2.0), 6);
    P += 1.0;
    const auto e = stress_power(v, P, p);
    EXPECT_LT(l2_norm(e.lhs - e.rhs) / l2_norm(e.rhs), 1e-9);
  }
}

TEST(Stress, EnergyFormIdentityAtRestFluid) {
  auto g = SpectralGrid::cube(8, kTwoPi);
  const auto e = stress_power(VectorField(g), ScalarField(g, 2.0), PhysParams{});
  EXPECT_EQ(e.lhs.max_abs(), 0.0);
  EXPECT_EQ(e.rhs.max_abs(), 0.0);
}

TEST(Stress, ViscousStressAtRest) {
  auto g = SpectralGrid::cube(8, kTwoPi);
  const auto s = viscous_stress(VectorField(g), ScalarField(g, 2.5), PhysParams{});
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) EXPECT_LT((s(i, j) - ScalarField(g, i == j ? -2.5 : 0.0)).max_abs(), 1e-15);
}

TEST(Heating, ShearDissipation) {
  auto g = SpectralGrid::cube(16, kTwoPi);
  const ScalarField s2 = sample(g, [](double, double y, double) { return std::sin(y); });
  const ScalarField c2sq = sample(g, [](double, double y, double) { return std::cos(y) * std::cos(y); });
  const VectorField v(s2, ScalarField(g), ScalarField(g));
  EXPECT_LT((dissipation(v, PhysParams{}) - c2sq).max_abs(), 1e-12);
  EXPECT_LT(dissipation(VectorField(g), PhysParams{}).max_abs(), 1e-300);
}

TEST(Heating, CapillaryVanishesForConstantDensity) {
  auto g = SpectralGrid::cube(16, 20.0);
  CounterRng rng(13);
  const VectorField v = random_smooth_vector(g, rng, 0.1, 2.0);
  EXPECT_LT(capillary_heating(ScalarField(g, 1.0), v, PhysParams{}).max_abs(), 1e-14);
}

TEST(Heating, CapillaryIsKortewegPower) {
  // Phi = K : grad v
  auto g = SpectralGrid::cube(32, 20.0);
  CounterRng rng(14);
  ScalarField rho = random_smooth(g, rng, 0.2, 2.0, true);
  rho += 1.0;
  const VectorField v = random_smooth_vector(g, rng, 0.1, 2.0, true);
  const PhysParams p;
  const TensorField k = korteweg_stress(rho, p);
  const TensorField gv = gradient(v);
  ScalarField power(g);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) power += product(k(i, j), gv(i, j));
  const ScalarField phi = capillary_heating(rho, v, p);
  EXPECT_LT(l2_norm(phi - power) / l2_norm(power), 1e-9);
}
