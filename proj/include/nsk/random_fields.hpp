#pragma once

#include <cmath>

#include "nsk/rng.hpp"
#include "nsk/spectral.hpp"

namespace nsk {

/// (1 + |x - c|^2 / s^2)^(-q/2): decays like |x|^(-q) away from c.
inline ScalarField bump(const GridPtr& g, const std::array<double, 3>& c, double s, double q = 4.0) {
  return sample(g, [&](double x, double y, double z) {
    const double d2 = (x - c[0]) * (x - c[0]) + (y - c[1]) * (y - c[1]) + (z - c[2]) * (z - c[2]);
    return std::pow(1.0 + d2 / (s * s), -0.5 * q);
  });
}

/// Bump near the box center times a smooth random modulation of wavelength >= s.
inline ScalarField modulated_bump(const GridPtr& g, CounterRng& rng, double s, double q = 4.0) {
  std::array<double, 3> c{};
  for (int a = 0; a < 3; ++a) c[a] = g->center(a) + (g->active(a) ? rng.uniform(-0.25, 0.25) * s : 0.0);
  ScalarField b = bump(g, c, s, q);
  std::array<std::array<double, 3>, 3> k{};
  std::array<double, 3> ph{}, am{};
  for (int j = 0; j < 3; ++j) {
    for (int a = 0; a < 3; ++a) k[j][a] = g->active(a) ? rng.uniform(-1.0, 1.0) / s : 0.0;
    ph[j] = rng.uniform(0.0, 2.0 * std::numbers::pi);
    am[j] = rng.uniform(-0.3, 0.3);
  }
  const ScalarField mod = sample(g, [&](double x, double y, double z) {
    double m = 1.0;
    for (int j = 0; j < 3; ++j) m += am[j] * std::cos(k[j][0] * x + k[j][1] * y + k[j][2] * z + ph[j]);
    return m;
  });
  return times(b, mod);
}

/// Mean-free decaying field: a modulated bump minus a wider bump carrying the same integral.
inline ScalarField mean_free_bump(const GridPtr& g, CounterRng& rng, double s, double q = 4.0) {
  ScalarField a = modulated_bump(g, rng, s, q);
  std::array<double, 3> c{g->center(0), g->center(1), g->center(2)};
  const ScalarField w = bump(g, c, 1.5 * s, q);
  a.axpy(-a.mean() / w.mean(), w);
  a += -a.mean();
  return a;
}

/// Keeps Fourier modes with d|m_a| < N_a on every axis.
inline ScalarField band_limited(const ScalarField& f, int d) {
  Spectrum s = fft(f);
  const auto& g = *f.grid();
  for (std::size_t m = 0; m < s.size(); ++m)
    for (int a = 0; a < 3; ++a)
      if (g.active(a) && d * std::abs(g.mode(m)[a]) >= g.n(a)) s[m] = 0.0;
  return ifft(s);
}

/// Top half of the spectrum empty.
inline ScalarField half_band(const ScalarField& f) { return band_limited(f, 4); }

/// Random smooth decaying mean-free scalar with max |f| = amplitude, band-limited to the
/// dealiased band (or half band). Large q with s = w sqrt(q) gives a near-Gaussian envelope of width w.
inline ScalarField random_smooth(const GridPtr& g, CounterRng& rng, double amplitude, double s, bool half = false, double q = 4.0) {
  ScalarField f = mean_free_bump(g, rng, s, q);
  f = half ? half_band(f) : dealias(f);
  f += -f.mean();
  const double m = f.max_abs();
  if (m > 0.0) f *= amplitude / m;
  return f;
}

inline VectorField random_smooth_vector(const GridPtr& g, CounterRng& rng, double amplitude, double s, bool half = false,
                                        double q = 4.0) {
  VectorField v(g);
  for (int i = 0; i < 3; ++i) v[i] = random_smooth(g, rng, amplitude, s, half, q);
  return v;
}

}  // namespace nsk
