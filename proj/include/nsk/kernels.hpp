#pragma once

#include <array>
#include <cmath>
#include <numbers>
#include <vector>

#include "nsk/spectral.hpp"

namespace nsk {

// ---------------------------------------------------------------- hyper-dual numbers

/// a + b e1 + c e2 + d e1 e2 with e1^2 = e2^2 = 0: exact first and mixed second derivatives.
struct HyperDual {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
  HyperDual() = default;
  HyperDual(double v) : a(v) {}  // NOLINT: constants promote implicitly
  HyperDual(double a_, double b_, double c_, double d_) : a(a_), b(b_), c(c_), d(d_) {}
};

inline HyperDual operator+(const HyperDual& x, const HyperDual& y) { return {x.a + y.a, x.b + y.b, x.c + y.c, x.d + y.d}; }
inline HyperDual operator-(const HyperDual& x, const HyperDual& y) { return {x.a - y.a, x.b - y.b, x.c - y.c, x.d - y.d}; }
inline HyperDual operator-(const HyperDual& x) { return {-x.a, -x.b, -x.c, -x.d}; }
inline HyperDual operator*(const HyperDual& x, const HyperDual& y) {
  return {x.a * y.a, x.a * y.b + x.b * y.a, x.a * y.c + x.c * y.a, x.a * y.d + x.b * y.c + x.c * y.b + x.d * y.a};
}

/// g(x) for a scalar function with value, first and second derivative at x.a.
inline HyperDual chain(const HyperDual& x, double g0, double g1, double g2) {
  return {g0, g1 * x.b, g1 * x.c, g1 * x.d + g2 * x.b * x.c};
}
inline HyperDual inv(const HyperDual& x) { return chain(x, 1.0 / x.a, -1.0 / (x.a * x.a), 2.0 / (x.a * x.a * x.a)); }
inline HyperDual operator/(const HyperDual& x, const HyperDual& y) { return x * inv(y); }
inline HyperDual sqrt(const HyperDual& x) {
  const double s = std::sqrt(x.a);
  return chain(x, s, 0.5 / s, -0.25 / (s * x.a));
}

// ---------------------------------------------------------------- kernels

/// Newtonian potential E0(x) = -1/(4 pi |x|), symbol -1/|xi|^2.
template <class T>
T newtonian_kernel(const std::array<T, 3>& x) {
  const T r = sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
  return -(1.0 / (4.0 * std::numbers::pi)) * inv(r);
}
inline double newtonian_kernel(const std::array<double, 3>& x) {
  return -1.0 / (4.0 * std::numbers::pi * std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]));
}

/// Oseen tensor E_ij(x) = (delta_ij/|x| + x_i x_j/|x|^3)/(8 pi mu), symbol (delta - xi xi/|xi|^2)/(mu |xi|^2).
template <class T>
T oseen_kernel(int i, int j, const std::array<T, 3>& x, double mu) {
  const T r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
  const T r = sqrt(r2);
  const T ir = inv(r);
  T v = x[i] * x[j] * ir * inv(r2);
  if (i == j) v = v + ir;
  return (1.0 / (8.0 * std::numbers::pi * mu)) * v;
}
inline double oseen_kernel(int i, int j, const std::array<double, 3>& x, double mu) {
  const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2], r = std::sqrt(r2);
  return ((i == j ? 1.0 / r : 0.0) + x[i] * x[j] / (r2 * r)) / (8.0 * std::numbers::pi * mu);
}

/// d^alpha K(x) for |alpha| <= 2, alpha given by up to two axis indices (-1 for none).
template <class F>
double kernel_derivative(F&& k, const std::array<double, 3>& x, int p = -1, int q = -1) {
  std::array<HyperDual, 3> h{HyperDual(x[0]), HyperDual(x[1]), HyperDual(x[2])};
  if (p >= 0) h[p].b = 1.0;
  if (q >= 0) h[q].c = 1.0;
  const HyperDual v = k(h);
  if (p >= 0 && q >= 0) return v.d;
  if (p >= 0) return v.b;
  if (q >= 0) return v.c;
  return v.a;
}

// ---------------------------------------------------------------- real-space path

/// Origin weight of the punctured trapezoidal rule for 1/|x| on the unit cubic lattice: minus the
/// regularized lattice sum of 1/|n|. With it the rule is fourth order for smooth data.
inline constexpr double kLatticeInverseRadius = 2.8372974794806196;

/// Samples k at minimum-image offsets from the origin, zero outside the ball, `origin` at x = 0.
template <class K>
ScalarField sample_offsets(const GridPtr& g, double radius, K&& k, double origin) {
  ScalarField f(g);
  auto off = [&](int a, int i) {
    if (!g->active(a)) return 0.0;
    return (2 * i <= g->n(a) ? i : i - g->n(a)) * g->dx(a);
  };
  for (int c = 0; c < g->n(2); ++c)
    for (int b = 0; b < g->n(1); ++b)
      for (int a = 0; a < g->n(0); ++a) {
        const std::array<double, 3> x{off(0, a), off(1, b), off(2, c)};
        const double r = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
        f[g->index(a, b, c)] = r == 0.0 ? origin : (r < radius ? k(x) : 0.0);
      }
  return f;
}

/// Kernel sampled at minimum-image grid offsets inside the ball |x| < radius. The origin holds the
/// lattice weight: C/h for 1/|x| and, by cubic symmetry, delta_ij C/(3h) for x_i x_j/|x|^3.
inline ScalarField sample_newtonian(const GridPtr& g, double radius) {
  const double h = std::cbrt(g->cell_volume());
  return sample_offsets(g, radius, [](const std::array<double, 3>& x) { return newtonian_kernel(x); },
                        -kLatticeInverseRadius / (4.0 * std::numbers::pi * h));
}

inline ScalarField sample_oseen(const GridPtr& g, int i, int j, double mu, double radius) {
  const double h = std::cbrt(g->cell_volume());
  const double origin = i == j ? (4.0 / 3.0) * kLatticeInverseRadius / (8.0 * std::numbers::pi * mu * h) : 0.0;
  return sample_offsets(g, radius, [&](const std::array<double, 3>& x) { return oseen_kernel(i, j, x, mu); }, origin);
}

/// Grid with every active axis doubled, for linear (non-periodic) convolution.
inline GridPtr padded_grid(const SpectralGrid& g) {
  std::array<int, 3> n{};
  std::array<double, 3> l{};
  for (int a = 0; a < 3; ++a) {
    n[a] = g.active(a) ? 2 * g.n(a) : 1;
    l[a] = g.active(a) ? 2.0 * g.length(a) : g.length(a);
  }
  return std::make_shared<const SpectralGrid>(n, l);
}

namespace detail {
inline ScalarField embed(const ScalarField& f, const GridPtr& gp) {
  const auto& g = *f.grid();
  ScalarField e(gp);
  for (int c = 0; c < g.n(2); ++c)
    for (int b = 0; b < g.n(1); ++b)
      for (int a = 0; a < g.n(0); ++a) e[gp->index(a, b, c)] = f[g.index(a, b, c)];
  return e;
}
inline ScalarField restrict_to(const ScalarField& e, const GridPtr& g) {
  const auto& gp = *e.grid();
  ScalarField f(g);
  for (int c = 0; c < g->n(2); ++c)
    for (int b = 0; b < g->n(1); ++b)
      for (int a = 0; a < g->n(0); ++a) f[g->index(a, b, c)] = e[gp.index(a, b, c)];
  return f;
}
/// Periodic discrete convolution sum_y k(x - y) f(y) h^3 through the FFT.
inline Spectrum convolve_spectrum(const ScalarField& k, const ScalarField& f) {
  const Spectrum a = fft(k), b = fft(f);
  Spectrum c(f.grid());
  const double V = f.grid()->volume();
  for (std::size_t m = 0; m < c.size(); ++m) c[m] = V * a[m] * b[m];
  return c;
}
}  // namespace detail

/// Direct discrete convolution of the box data with the kernel sampled on the ball |x| < radius,
/// as if the data were extended by zero (Hockney padding). radius <= 0 keeps every offset.
inline ScalarField newtonian_real_space(const ScalarField& f, double radius = 0.0) {
  const GridPtr gp = padded_grid(*f.grid());
  const double R = radius > 0.0 ? radius : 1e300;
  const Spectrum c = detail::convolve_spectrum(sample_newtonian(gp, R), detail::embed(f, gp));
  return detail::restrict_to(ifft(c), f.grid());
}

/// Real-space Oseen solve w_j = sum_i E_ij * f_i with the same padding protocol.
inline VectorField oseen_real_space(const VectorField& f, double mu, double radius = 0.0) {
  const GridPtr gp = padded_grid(*f.grid());
  const double R = radius > 0.0 ? radius : 1e300;
  std::array<ScalarField, 3> fe{detail::embed(f[0], gp), detail::embed(f[1], gp), detail::embed(f[2], gp)};
  std::array<Spectrum, 3> acc{Spectrum(gp), Spectrum(gp), Spectrum(gp)};
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      const ScalarField k = sample_oseen(gp, i, j, mu, R);
      acc[j] += detail::convolve_spectrum(k, fe[i]);
      if (j != i) acc[i] += detail::convolve_spectrum(k, fe[j]);
    }
  VectorField w(f.grid());
  for (int j = 0; j < 3; ++j) w[j] = detail::restrict_to(ifft(acc[j]), f.grid());
  return w;
}

}  // namespace nsk
