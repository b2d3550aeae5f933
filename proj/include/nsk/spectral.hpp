#pragma once

#include <array>
#include <cmath>
#include <functional>
#include <string>

#include "nsk/field.hpp"

namespace nsk {

// ---------------------------------------------------------------- derivatives

/// Multiplies by (i xi)^alpha. Odd powers annihilate the Nyquist mode.
inline Spectrum derivative(const Spectrum& s, const std::array<int, 3>& alpha) {
  const auto& g = *s.grid();
  Spectrum r(s.grid());
  for (std::size_t m = 0; m < s.size(); ++m) {
    Complex f(1.0, 0.0);
    for (int a = 0; a < 3; ++a) {
      const int p = alpha[a];
      if (p == 0) continue;
      const double k = (p % 2) ? g.dxi(m, a) : g.xi(m)[a];
      f *= std::pow(Complex(0.0, k), p);
    }
    r[m] = f * s[m];
  }
  return r;
}

inline Spectrum derivative(const Spectrum& s, int axis) {
  std::array<int, 3> al{0, 0, 0};
  al[axis] = 1;
  return derivative(s, al);
}

inline ScalarField partial(const ScalarField& f, int axis) { return ifft(derivative(fft(f), axis)); }

inline ScalarField partial(const ScalarField& f, int a, int b) {
  std::array<int, 3> al{0, 0, 0};
  al[a] += 1;
  al[b] += 1;
  return ifft(derivative(fft(f), al));
}

inline Spectrum laplacian(const Spectrum& s) {
  Spectrum r(s.grid());
  for (std::size_t m = 0; m < s.size(); ++m) r[m] = -s.grid()->xi2(m) * s[m];
  return r;
}

inline ScalarField laplacian(const ScalarField& f) { return ifft(laplacian(fft(f))); }

inline VectorField grad(const Spectrum& s) {
  return VectorField(ifft(derivative(s, 0)), ifft(derivative(s, 1)), ifft(derivative(s, 2)));
}
inline VectorField grad(const ScalarField& f) { return grad(fft(f)); }

inline Spectrum div_spectrum(const VectorField& v) {
  Spectrum r = derivative(fft(v[0]), 0);
  r += derivative(fft(v[1]), 1);
  r += derivative(fft(v[2]), 2);
  return r;
}
inline ScalarField div(const VectorField& v) { return ifft(div_spectrum(v)); }

inline VectorField laplacian(const VectorField& v) {
  return VectorField(laplacian(v[0]), laplacian(v[1]), laplacian(v[2]));
}

inline VectorField grad_div(const VectorField& v) { return grad(div_spectrum(v)); }

/// grad of the Laplacian.
inline VectorField grad_laplacian(const ScalarField& f) { return grad(laplacian(fft(f))); }

/// Hessian entries d_i d_j f.
inline TensorField hessian(const ScalarField& f) {
  const Spectrum s = fft(f);
  TensorField h(f.grid());
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      std::array<int, 3> al{0, 0, 0};
      al[i] += 1;
      al[j] += 1;
      h(i, j) = ifft(derivative(s, al));
      if (j != i) h(j, i) = h(i, j);
    }
  return h;
}

/// (grad v)_{ij} = d_i v_j
inline TensorField gradient(const VectorField& v) {
  TensorField t(v.grid());
  for (int j = 0; j < 3; ++j) {
    const Spectrum s = fft(v[j]);
    for (int i = 0; i < 3; ++i) t(i, j) = ifft(derivative(s, i));
  }
  return t;
}

/// Row divergence (div T)_i = d_j T_{ij}.
inline VectorField div(const TensorField& t) {
  VectorField r(t(0, 0).grid());
  for (int i = 0; i < 3; ++i) {
    Spectrum s = derivative(fft(t(i, 0)), 0);
    s += derivative(fft(t(i, 1)), 1);
    s += derivative(fft(t(i, 2)), 2);
    r[i] = ifft(s);
  }
  return r;
}

// ---------------------------------------------------------------- dealiasing

inline void dealias_inplace(Spectrum& s) {
  for (std::size_t m = 0; m < s.size(); ++m)
    if (!s.grid()->keep(m)) s[m] = 0.0;
}

inline ScalarField dealias(const ScalarField& f) {
  Spectrum s = fft(f);
  dealias_inplace(s);
  return ifft(s);
}

inline VectorField dealias(const VectorField& v) { return VectorField(dealias(v[0]), dealias(v[1]), dealias(v[2])); }

/// Relative l2 weight of the modes removed by the two-thirds rule.
inline double out_of_band_fraction(const ScalarField& f) {
  const Spectrum s = fft(f);
  double tot = 0.0, out = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    const double e = s.grid()->hermitian_weight(m) * std::norm(s[m]);
    tot += e;
    if (!s.grid()->keep(m)) out += e;
  }
  return tot > 0.0 ? std::sqrt(out / tot) : 0.0;
}

/// Dealiased product.
inline ScalarField product(const ScalarField& a, const ScalarField& b) { return dealias(times(a, b)); }

inline VectorField product(const ScalarField& a, const VectorField& v) {
  return VectorField(product(a, v[0]), product(a, v[1]), product(a, v[2]));
}

/// Dealiased dot product.
inline ScalarField dot(const VectorField& a, const VectorField& b) {
  ScalarField r = times(a[0], b[0]);
  r += times(a[1], b[1]);
  r += times(a[2], b[2]);
  return dealias(r);
}

/// Dealiased (b . grad) c for a scalar c.
inline ScalarField advect(const VectorField& b, const ScalarField& c) { return dot(b, grad(c)); }

/// Dealiased (b . grad) c for a vector c.
inline VectorField advect(const VectorField& b, const VectorField& c) {
  VectorField r(b.grid());
  for (int i = 0; i < 3; ++i) r[i] = advect(b, c[i]);
  return r;
}

// ---------------------------------------------------------------- zero modes

/// What to do with the mean under a symbol that is singular at xi = 0.
enum class ZeroMode { Error, Drop, Keep };

inline double spectrum_scale(const Spectrum& s) {
  double m = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) m = std::max(m, std::abs(s[i]));
  return m;
}

inline bool has_mean(const Spectrum& s, double rtol = 1e-12) { return std::abs(s[0]) > rtol * spectrum_scale(s) + 1e-300; }

/// Checks that the mean vanishes (Error) or removes it (Drop); Keep leaves it alone.
inline void handle_zero_mode(Spectrum& s, ZeroMode policy, const std::string& what, ErrorCode code = ErrorCode::ZeroModeSingular) {
  if (policy == ZeroMode::Keep) return;
  if (policy == ZeroMode::Error && has_mean(s)) fail(code, what + " has a nonzero mean " + std::to_string(std::abs(s[0])));
  s[0] = 0.0;
}

// ---------------------------------------------------------------- symbols

/// Scalar Fourier multiplier m(xi), possibly singular at xi = 0.
struct KernelSymbol {
  std::string name;
  std::function<double(const std::array<double, 3>&, double)> value;  // (xi, |xi|^2)
  bool singular_at_zero = false;
};

/// Newtonian potential E0 = -1/(4 pi |x|): symbol -1/|xi|^2, so Lap(E0 * f) = f.
inline KernelSymbol newtonian_symbol() {
  return {"newtonian", [](const std::array<double, 3>&, double k2) { return -1.0 / k2; }, true};
}

/// Bessel potential: symbol 1/(1 + c |xi|^2) with c = kappa * gamma1; inverts (1 - c Lap).
inline KernelSymbol bessel_symbol(double c) {
  return {"bessel", [c](const std::array<double, 3>&, double k2) { return 1.0 / (1.0 + c * k2); }, false};
}

inline Spectrum apply_symbol(const Spectrum& s, const KernelSymbol& k, ZeroMode policy = ZeroMode::Error) {
  Spectrum r = s;
  const auto& g = *s.grid();
  if (k.singular_at_zero)
    handle_zero_mode(r, policy, k.name + " input");
  else
    r[0] *= k.value(g.xi(0), 0.0);
  for (std::size_t m = 1; m < r.size(); ++m) r[m] *= k.value(g.xi(m), g.xi2(m));
  return r;
}

inline ScalarField apply_symbol(const ScalarField& f, const KernelSymbol& k, ZeroMode policy = ZeroMode::Error) {
  return ifft(apply_symbol(fft(f), k, policy));
}

inline Spectrum newtonian(const Spectrum& s, ZeroMode policy = ZeroMode::Error) { return apply_symbol(s, newtonian_symbol(), policy); }
inline Spectrum bessel(const Spectrum& s, double c) { return apply_symbol(s, bessel_symbol(c)); }

/// Oseen tensor E_ij: symbol (1/(mu |xi|^2)) (I - xi xi^T/|xi|^2). Returns the solenoidal w
/// with -mu Lap w = (solenoidal part of f).
inline VectorField oseen_solve(const VectorField& f, double mu, ZeroMode policy = ZeroMode::Error) {
  std::array<Spectrum, 3> s{fft(f[0]), fft(f[1]), fft(f[2])};
  for (auto& x : s) handle_zero_mode(x, policy, "Oseen input", ErrorCode::NonZeroMean);
  const auto& g = *f.grid();
  for (std::size_t m = 1; m < g.spectral_size(); ++m) {
    const std::array<double, 3> k{g.dxi(m, 0), g.dxi(m, 1), g.dxi(m, 2)};
    const double kd2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
    const double k2 = g.xi2(m);
    const Complex kf = k[0] * s[0][m] + k[1] * s[1][m] + k[2] * s[2][m];
    for (int i = 0; i < 3; ++i) {
      const Complex p = kd2 > 0.0 ? s[i][m] - k[i] * kf / kd2 : s[i][m];
      s[i][m] = p / (mu * k2);
    }
  }
  return VectorField(ifft(s[0]), ifft(s[1]), ifft(s[2]));
}

// ---------------------------------------------------------------- Helmholtz

/// v = w + grad p with div w = 0 and p mean free.
struct Helmholtz {
  VectorField w;
  ScalarField p;
};

inline Helmholtz helmholtz(const VectorField& v, ZeroMode policy = ZeroMode::Error) {
  const auto& g = v.grid();
  std::array<Spectrum, 3> s{fft(v[0]), fft(v[1]), fft(v[2])};
  for (auto& x : s) handle_zero_mode(x, policy, "Helmholtz input", ErrorCode::NonZeroMean);
  Spectrum p(g);
  for (std::size_t m = 1; m < g->spectral_size(); ++m) {
    // odd-derivative wavenumbers, so div w vanishes discretely
    const std::array<double, 3> kd{g->dxi(m, 0), g->dxi(m, 1), g->dxi(m, 2)};
    const double kd2 = kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2];
    if (kd2 == 0.0) continue;
    const Complex kv = kd[0] * s[0][m] + kd[1] * s[1][m] + kd[2] * s[2][m];
    p[m] = Complex(0.0, -1.0) * kv / kd2;
  }
  Helmholtz h;
  h.p = ifft(p);
  h.w = v - grad(p);
  return h;
}

// ---------------------------------------------------------------- misc

inline double l2_norm(const ScalarField& f) {
  double s = 0.0;
  for (double x : f.values()) s += x * x;
  return std::sqrt(s * f.grid()->cell_volume());
}

inline double l2_norm(const VectorField& v) {
  return std::sqrt(l2_norm(v[0]) * l2_norm(v[0]) + l2_norm(v[1]) * l2_norm(v[1]) + l2_norm(v[2]) * l2_norm(v[2]));
}

/// L2 inner product.
inline double inner(const ScalarField& a, const ScalarField& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.grid()->cell_volume();
}

inline double inner(const VectorField& a, const VectorField& b) {
  return inner(a[0], b[0]) + inner(a[1], b[1]) + inner(a[2], b[2]);
}

/// Samples f(x1, x2, x3) at the grid points.
template <class F>
ScalarField sample(const GridPtr& g, F&& f) {
  ScalarField r(g);
  for (int k = 0; k < g->n(2); ++k)
    for (int j = 0; j < g->n(1); ++j)
      for (int i = 0; i < g->n(0); ++i) r[g->index(i, j, k)] = f(g->coord(0, i), g->coord(1, j), g->coord(2, k));
  return r;
}

}  // namespace nsk
