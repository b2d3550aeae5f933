#include <gtest/gtest.h>

#include "nsk/forcing.hpp"

using namespace nsk;

namespace {

GridPtr box(int n = 32, double L = 40.0) { return SpectralGrid::cube(n, L); }

}  // namespace

TEST(Forcing, ZeroAmplitudeIsZero) {
  ForcingSpec s;
  s.amplitude = 0.0;
  const auto fd = build_forcing(box(), s);
  EXPECT_EQ(fd.G.max_abs() + fd.F.max_abs() + fd.H.max_abs(), 0.0);
  EXPECT_EQ(forcing_norm_L(fd).total, 0.0);
}

TEST(Forcing, RandomReassembly) {
  ForcingSpec s;
  s.seed = 17;
  const auto fd = build_forcing(box(), s);
  EXPECT_LT(fd.reassembly_residual(), 1e-10);
  EXPECT_GT(fd.G.max_abs(), 0.0);
  EXPECT_LT(std::abs(fd.G.mean()) + std::abs(fd.H.mean()), 1e-18);
  EXPECT_LT(out_of_band_fraction(fd.G), 1e-12);
}

TEST(Forcing, OnlyF2IsDegenerate) {
  auto g = box();
  ForcingData fd = ForcingData::zero(g);
  fd.F2[0] = dealias(bump(g, {20, 20, 20}, 3.0));
  fd.F2[0] += -fd.F2[0].mean();
  fd.F2[0] *= 1e-4 / fd.F2[0].max_abs();
  fd.reassemble();
  EXPECT_LT((fd.F - fd.F2).max_abs(), 1e-300);
  EXPECT_EQ(div(fd.F1).max_abs(), 0.0);
}

TEST(Forcing, SameSeedSameData) {
  ForcingSpec s;
  s.seed = 5;
  const auto a = build_forcing(box(16), s), b = build_forcing(box(16), s);
  EXPECT_EQ(a.H.values(), b.H.values());
  s.seed = 6;
  const auto c = build_forcing(box(16), s);
  EXPECT_NE(a.H.values(), c.H.values());
}

TEST(Forcing, BoxTooSmallRejected) {
  ForcingSpec s;
  try {
    build_forcing(box(16, 8.0), s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BoxTooSmall);
  }
}

TEST(Forcing, SmallnessScalesLinearly) {
  ForcingSpec s;
  const auto fd = build_forcing(box(), s);
  const auto a = forcing_smallness(fd), b = forcing_smallness(fd.scaled(2.0));
  EXPECT_NEAR(b.K / a.K, 2.0, 1e-12);
  EXPECT_NEAR(b.K0 / a.K0, 2.0, 1e-12);
  EXPECT_NEAR(a.boundary_tail, b.boundary_tail, 1e-12);
  EXPECT_GT(a.K, 0.0);
  EXPECT_GE(a.budget, a.K);
}
