#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nsk/norms.hpp"
#include "nsk/random_fields.hpp"
#include "nsk/spectral.hpp"

using namespace nsk;

namespace {

const double kTwoPi = 2.0 * std::numbers::pi;

GridPtr unit_grid(int n = 16) { return SpectralGrid::cube(n, kTwoPi); }

double max_diff(const ScalarField& a, const ScalarField& b) { return (a - b).max_abs(); }

ScalarField sin1(const GridPtr& g) {
  return sample(g, [](double x, double, double) { return std::sin(x); });
}

}  // namespace

TEST(Grid, RejectsTooFewPoints) {
  EXPECT_THROW(SpectralGrid::cube(4, 1.0), Error);
  EXPECT_NO_THROW(SpectralGrid::cube(8, 1.0));
}

TEST(Grid, DealiasMaskKeepsTwoThirds) {
  auto g = unit_grid(32);
  for (std::size_t s = 0; s < g->spectral_size(); ++s) {
    const auto& m = g->mode(s);
    const bool expect = std::abs(m[0]) <= 10 && std::abs(m[1]) <= 10 && std::abs(m[2]) <= 10;
    ASSERT_EQ(g->keep(s), expect);
  }
}

TEST(Spectral, RoundTrip) {
  auto g = unit_grid();
  CounterRng rng(3);
  ScalarField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.normal();
  EXPECT_LT(max_diff(ifft(fft(f)), f) / f.max_abs(), 1e-12);
}

TEST(Spectral, Parseval) {
  auto g = unit_grid();
  CounterRng rng(4);
  ScalarField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = rng.normal();
  const double direct = l2_norm(f);
  const double spec = sobolev_norm(f, 0);
  EXPECT_NEAR(spec / direct, 1.0, 1e-12);
}

TEST(Spectral, GradientOfSine) {
  auto g = unit_grid();
  const VectorField gr = grad(sin1(g));
  const ScalarField c = sample(g, [](double x, double, double) { return std::cos(x); });
  EXPECT_LT(max_diff(gr[0], c), 1e-12);
  EXPECT_LT(gr[1].max_abs(), 1e-12);
  EXPECT_LT(gr[2].max_abs(), 1e-12);
}

TEST(Spectral, DivGradIsLaplacian) {
  auto g = unit_grid();
  const ScalarField f = sample(g, [](double x, double y, double) { return std::sin(x) + std::cos(y); });
  const ScalarField expect = sample(g, [](double x, double y, double) { return -std::sin(x) - std::cos(y); });
  EXPECT_LT(max_diff(div(grad(f)), expect), 1e-12);
  EXPECT_LT(max_diff(div(grad(f)), laplacian(f)), 1e-12);
}

TEST(Spectral, GradLaplacianOfSine) {
  auto g = unit_grid();
  const VectorField r = grad_laplacian(sin1(g));
  const ScalarField c = sample(g, [](double x, double, double) { return -std::cos(x); });
  EXPECT_LT(max_diff(r[0], c), 1e-12);
  EXPECT_LT(r[1].max_abs() + r[2].max_abs(), 1e-12);
}

TEST(Spectral, OperatorsCommute) {
  auto g = unit_grid(32);
  CounterRng rng(5);
  const ScalarField f = random_smooth(g, rng, 1.0, 1.0);
  EXPECT_LT(max_diff(partial(partial(f, 0), 1), partial(partial(f, 1), 0)), 1e-12);
  EXPECT_LT(max_diff(laplacian(partial(f, 2)), partial(laplacian(f), 2)), 1e-12);
}

TEST(Helmholtz, PureGradient) {
  auto g = unit_grid();
  const auto h = helmholtz(grad(sin1(g)));
  EXPECT_LT(h.w.max_abs(), 1e-12);
  EXPECT_LT(max_diff(h.p, sin1(g)), 1e-12);
}

TEST(Helmholtz, AlreadySolenoidal) {
  auto g = unit_grid();
  const ScalarField s2 = sample(g, [](double, double y, double) { return std::sin(y); });
  const VectorField v(s2, ScalarField(g), ScalarField(g));
  const auto h = helmholtz(v);
  EXPECT_LT(h.p.max_abs(), 1e-12);
  EXPECT_LT((h.w - v).max_abs(), 1e-12);
}

TEST(Helmholtz, RandomReassembly) {
  auto g = unit_grid(32);
  CounterRng rng(6);
  const VectorField v = random_smooth_vector(g, rng, 1.0, 1.0);
  const auto h = helmholtz(v);
  EXPECT_LT(l2_norm(v - h.w - grad(h.p)) / l2_norm(v), 1e-12);
  EXPECT_LT(l2_norm(div(h.w)) / l2_norm(v), 1e-12);
  EXPECT_LT(std::abs(h.p.mean()), 1e-14);
}

TEST(Helmholtz, NonZeroMeanRejected) {
  auto g = unit_grid();
  const VectorField v(g, 1.0);
  try {
    helmholtz(v);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NonZeroMean);
  }
}

TEST(Symbols, BesselOnSingleMode) {
  auto g = unit_grid();
  const ScalarField r = apply_symbol(sin1(g), bessel_symbol(1.0));
  EXPECT_LT(max_diff(r, 0.5 * sin1(g)), 1e-14);
}

TEST(Symbols, BesselExactOnLattice) {
  auto g = SpectralGrid::cube(32, 16.0 * std::numbers::pi);
  const auto k = bessel_symbol(0.7);
  EXPECT_EQ(k.value(g->xi(0), 0.0), 1.0);
  for (std::size_t s = 0; s < g->spectral_size(); ++s) ASSERT_EQ(k.value(g->xi(s), g->xi2(s)), 1.0 / (1.0 + 0.7 * g->xi2(s)));
}

TEST(Symbols, InverseLaplacian) {
  auto g = unit_grid();
  const ScalarField r = apply_symbol(-sin1(g), newtonian_symbol());
  EXPECT_LT(max_diff(r, sin1(g)), 1e-14);
}

TEST(Symbols, ConstantUnderInverseLaplacianFails) {
  auto g = unit_grid();
  try {
    apply_symbol(ScalarField(g, 2.0), newtonian_symbol(), ZeroMode::Error);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroModeSingular);
  }
  EXPECT_LT(apply_symbol(ScalarField(g, 2.0), newtonian_symbol(), ZeroMode::Drop).max_abs(), 1e-15);
}

TEST(Oseen, TransverseMode) {
  auto g = unit_grid();
  const ScalarField c2 = sample(g, [](double, double y, double) { return std::cos(y); });
  const VectorField f(c2, ScalarField(g), ScalarField(g));
  const VectorField w = oseen_solve(f, 1.0);
  EXPECT_LT((w - f).max_abs(), 1e-14);
  EXPECT_LT(oseen_solve(VectorField(g), 1.0).max_abs(), 1e-300);
}

TEST(Oseen, SolvesStokesOnRandomData) {
  auto g = unit_grid(32);
  CounterRng rng(7);
  const VectorField f = random_smooth_vector(g, rng, 1.0, 1.0);
  const double mu = 1.3;
  const VectorField w = oseen_solve(f, mu);
  VectorField lhs = laplacian(w);
  lhs *= -mu;
  const auto h = helmholtz(f);
  EXPECT_LT(l2_norm(lhs - h.w) / l2_norm(f), 1e-12);
  EXPECT_LT(l2_norm(div(w)) / l2_norm(w), 1e-12);
}

TEST(Grid, OneDimensionalDebugMode) {
  auto g = SpectralGrid::cube(16, kTwoPi, 1);
  EXPECT_EQ(g->dims(), 1);
  EXPECT_EQ(g->size(), 16u);
  const ScalarField f = sin1(g);
  EXPECT_LT(max_diff(laplacian(f), -f), 1e-13);
}
