#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "nsk/kernels.hpp"
#include "nsk/norms.hpp"
#include "nsk/verification.hpp"

using namespace nsk;

namespace {

const double kPi = std::numbers::pi;

ScalarField gaussian(const GridPtr& g, double s) {
  return sample(g, [&](double x, double y, double z) {
    const double dx = x - g->center(0), dy = y - g->center(1), dz = z - g->center(2);
    return std::exp(-(dx * dx + dy * dy + dz * dz) / (2 * s * s));
  });
}

/// Laplacian of the Gaussian above, in closed form.
ScalarField gaussian_laplacian(const GridPtr& g, double s) {
  return sample(g, [&](double x, double y, double z) {
    const double dx = x - g->center(0), dy = y - g->center(1), dz = z - g->center(2);
    const double r2 = dx * dx + dy * dy + dz * dz;
    return (r2 / (s * s * s * s) - 3.0 / (s * s)) * std::exp(-r2 / (2 * s * s));
  });
}

ScalarField mean_free(ScalarField f) {
  f += -f.mean();
  return f;
}

const std::array<double, 3> kPoint{0.7, -1.3, 0.4};

/// Gaussian width with the box edge at 3e-9 of the peak, so periodization is invisible.
const double kWidth = 2.0;
GridPtr real_space_grid() { return SpectralGrid::cube(48, 8 * kPi); }

}  // namespace

TEST(HyperDual, NewtonianGradientAndHessian) {
  const auto& x = kPoint;
  const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  auto k = [](const auto& y) { return newtonian_kernel(y); };
  EXPECT_NEAR(kernel_derivative(k, x), -1.0 / (4 * kPi * r), 1e-15);
  for (int p = 0; p < 3; ++p) {
    EXPECT_NEAR(kernel_derivative(k, x, p), x[p] / (4 * kPi * r * r * r), 1e-15);
    for (int q = 0; q < 3; ++q) {
      const double exact = ((p == q ? r * r : 0.0) - 3 * x[p] * x[q]) / (4 * kPi * std::pow(r, 5));
      EXPECT_NEAR(kernel_derivative(k, x, p, q), exact, 1e-14);
    }
  }
}

TEST(HyperDual, OseenMatchesFiniteDifferences) {
  const double mu = 1.7, h = 1e-5;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      auto k = [=](const auto& y) { return oseen_kernel(i, j, y, mu); };
      EXPECT_DOUBLE_EQ(kernel_derivative(k, kPoint), oseen_kernel(i, j, kPoint, mu));
      for (int p = 0; p < 3; ++p) {
        auto xp = kPoint, xm = kPoint;
        xp[p] += h;
        xm[p] -= h;
        const double fd = (oseen_kernel(i, j, xp, mu) - oseen_kernel(i, j, xm, mu)) / (2 * h);
        EXPECT_NEAR(kernel_derivative(k, kPoint, p), fd, 1e-8);
        for (int q = 0; q < 3; ++q) {
          auto ap = xp, am = xm;
          ap[q] += h;
          am[q] += h;
          auto bp = xp, bm = xm;
          bp[q] -= h;
          bm[q] -= h;
          const double fd2 = ((oseen_kernel(i, j, ap, mu) - oseen_kernel(i, j, am, mu)) -
                              (oseen_kernel(i, j, bp, mu) - oseen_kernel(i, j, bm, mu))) /
                             (4 * h * h);
          EXPECT_NEAR(kernel_derivative(k, kPoint, p, q), fd2, 1e-5);
        }
      }
    }
}

TEST(Oseen, KernelIsDivergenceFreeAwayFromOrigin) {
  const double mu = 0.8;
  for (int j = 0; j < 3; ++j) {
    double d = 0.0;
    for (int i = 0; i < 3; ++i) d += kernel_derivative([=](const auto& y) { return oseen_kernel(i, j, y, mu); }, kPoint, i);
    EXPECT_NEAR(d, 0.0, 1e-15);
  }
}

TEST(RealSpace, NewtonianRecoversGaussian) {
  auto g = real_space_grid();
  const ScalarField u = gaussian(g, kWidth);
  const ScalarField w = newtonian_real_space(gaussian_laplacian(g, kWidth));
  EXPECT_LT((w - u).max_abs() / u.max_abs(), 1e-3);
}

TEST(RealSpace, NewtonianAgreesWithSymbolUpToMean) {
  auto g = real_space_grid();
  const ScalarField f = gaussian_laplacian(g, kWidth);
  const ScalarField real = mean_free(newtonian_real_space(f));
  const ScalarField spec = mean_free(ifft(newtonian(fft(f), ZeroMode::Drop)));
  EXPECT_LT((real - spec).max_abs() / spec.max_abs(), 1e-3);
}

/// w = curl(c u) for a Gaussian u: solenoidal and fast decaying, with f = -mu Lap w.
VectorField swirl(const GridPtr& g, double width = kWidth) {
  const ScalarField u = gaussian(g, width);
  const std::array<double, 3> c{1.0, -0.5, 1.0 / 3.0};
  const VectorField gu = grad(u);
  VectorField w(g);
  for (int i = 0; i < 3; ++i) {
    const int j = (i + 1) % 3, k = (i + 2) % 3;
    w[i] = gu[j];
    w[i] *= c[k];
    w[i].axpy(-c[j], gu[k]);
  }
  return w;
}

TEST(RealSpace, OseenRecoversSolenoidalField) {
  auto g = real_space_grid();
  const double mu = 1.3;
  const VectorField w = swirl(g);
  VectorField f = laplacian(w);
  f *= -mu;
  const VectorField real = oseen_real_space(f, mu);
  const VectorField spec = oseen_solve(f, mu, ZeroMode::Drop);
  double e_real = 0.0, e_spec = 0.0;
  for (int i = 0; i < 3; ++i) {
    e_real = std::max(e_real, (real[i] - w[i]).max_abs());
    e_spec = std::max(e_spec, (spec[i] - w[i]).max_abs());
  }
  EXPECT_LT(e_real / w.max_abs(), 1e-3);
  EXPECT_LT(e_spec / w.max_abs(), 1e-10);
}

TEST(RealSpace, OseenAgreesWithSymbolOnLargeBox) {
  // N = 64 on a 16 pi box with a width-3 swirl: same grid spacing ratio as above
  auto g = SpectralGrid::cube(64, 16 * kPi);
  const double mu = 0.6;
  const VectorField w = swirl(g, 3.0);
  VectorField f = laplacian(w);
  f *= -mu;
  const VectorField real = oseen_real_space(f, mu);
  const VectorField spec = oseen_solve(f, mu, ZeroMode::Drop);
  double e = 0.0;
  for (int i = 0; i < 3; ++i) e = std::max(e, (real[i] - spec[i]).max_abs());
  EXPECT_LT(e / spec.max_abs(), 1e-3);
}

TEST(RealSpace, OseenAnnihilatesGradients) {
  auto g = real_space_grid();
  const double mu = 1.3;
  const VectorField f = grad(gaussian_laplacian(g, kWidth));
  const VectorField real = oseen_real_space(f, mu);
  EXPECT_LT(real.max_abs() / oseen_real_space(laplacian(swirl(g)), mu).max_abs(), 1e-3);
}

TEST(KernelDecay, NewtonianConstantIsExact) {
  const auto rep = audit_kernel_decay();
  EXPECT_TRUE(rep.pass);
  EXPECT_NEAR(rep.find("E0", 0).constant, 1.0 / (4 * kPi), 1e-15);
  EXPECT_NEAR(rep.find("E0", 1).constant, 1.0 / (4 * kPi), 1e-15);
  EXPECT_NEAR(rep.find("E0", 2).constant, 2.0 / (4 * kPi), 1e-14);
}

TEST(KernelDecay, OseenBoundedByTriangleInequality) {
  const double mu = 2.0;
  const auto rep = audit_kernel_decay(mu);
  EXPECT_TRUE(rep.pass);
  for (const char* k : {"E11", "E12", "E13", "E22", "E23", "E33"}) EXPECT_LE(rep.find(k, 0).constant, (1 + 1e-12) / (4 * kPi * mu));
  EXPECT_NEAR(rep.find("E11", 0).constant, 1.0 / (4 * kPi * mu), 1e-14);
  EXPECT_NEAR(rep.find("E12", 0).constant, 1.0 / (16 * kPi * mu), 1e-14);
}

TEST(KernelDecay, DoublingRadiusHalvesBound) {
  const auto rep = audit_kernel_decay();
  for (const auto& e : rep.entries) {
    EXPECT_LT(e.homogeneity_defect, 1e-10) << e.kernel << " order " << e.order;
    if (e.order == 0) {
      EXPECT_NEAR(e.doubled_constant, 0.5 * e.constant, 1e-15);
    }
  }
}
