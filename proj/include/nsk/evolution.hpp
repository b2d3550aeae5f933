#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nsk/stationary.hpp"

namespace nsk {

// ---------------------------------------------------------------- states

/// Perturbation (sigma, w, theta) = (rho - rho*, v - v*, theta - theta*) about a steady state.
/// sigma here is a density difference, unlike the pressure perturbation of StationaryState.
struct PerturbationState {
  ScalarField sigma;
  VectorField w;
  ScalarField theta;
  double t = 0.0;

  static PerturbationState zero(const GridPtr& g) {
    PerturbationState x;
    x.sigma = ScalarField(g);
    x.w = VectorField(g);
    x.theta = ScalarField(g);
    return x;
  }
  const GridPtr& grid() const { return sigma.grid(); }
  bool finite() const { return sigma.finite() && w.finite() && theta.finite(); }
};

/// Defect of a steady state in the time-dependent equations, written per unit of the time
/// derivative: mass, velocity and temperature equations. Means are removed.
struct SteadyDefect {
  ScalarField mass;
  VectorField momentum;
  ScalarField energy;
};

/// Steady state (rho*, v*, theta*) with the fields reused at every step.
struct SteadyState {
  ScalarField rho;      // rho*
  ScalarField drho;     // rho* - rho_bar
  ScalarField theta;    // theta*, absolute
  VectorField v;        // v*
  ScalarField sigma_p;  // pressure perturbation of the stationary solution
  ScalarField theta_p;  // theta* - theta_bar
  ScalarField A, B, D, E;
  VectorField grad_rho, grad_theta, visc_v;
  ScalarField div_v, heat;  // heat = Psi(v*) + Phi(rho*, v*)
  SteadyDefect defect;

  const GridPtr& grid() const { return rho.grid(); }
};

namespace detail {

inline void remove_mean(ScalarField& f) { f += -f.mean(); }

inline void fill_steady_cache(SteadyState& s, const Model& m) {
  const auto& p = m.params();
  const auto c = evolution_coeffs(m, s.rho, s.theta);
  s.A = c.A;
  s.B = c.B;
  s.D = c.D;
  s.E = c.E;
  s.grad_rho = grad(s.drho);
  s.grad_theta = grad(s.theta_p);
  s.visc_v = viscous_operator(s.v, p);
  s.div_v = div(s.v);
  s.heat = dissipation(s.v, p) + capillary_heating(s.rho, s.v, p);
}

inline ScalarField ratio(const ScalarField& a, const ScalarField& b) {
  return map2(a, b, [](double x, double y) { return x / y; });
}

}  // namespace detail

/// Residual of the steady fields in the velocity and temperature forms of the time-dependent system.
inline SteadyDefect steady_defect(const SteadyState& s, const ForcingData& fd, const Model& m) {
  const auto& p = m.params();
  SteadyDefect d;
  d.mass = div(product(s.rho, s.v)) - fd.G;

  d.momentum = advect(s.v, s.v);
  d.momentum -= product(detail::ratio(ScalarField(s.grid(), 1.0), s.rho), s.visc_v);
  d.momentum += product(s.A, s.grad_rho);
  d.momentum += product(s.B, s.grad_theta);
  d.momentum.axpy(-p.kappa, grad_laplacian(s.drho));
  d.momentum -= fd.F;
  d.momentum += product(detail::ratio(fd.G, s.rho), s.v);

  ScalarField e = advect(s.v, s.theta_p);
  e += product(s.E, s.div_v);
  e.axpy(-p.alpha_tilde, product(s.D, laplacian(s.theta_p)));
  ScalarField src(s.grid());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double v2 = s.v[0][i] * s.v[0][i] + s.v[1][i] * s.v[1][i] + s.v[2][i] * s.v[2][i];
    src[i] = s.D[i] * (s.heat[i] + fd.H[i] + (0.5 * v2 - p.c_v * s.theta[i]) * fd.G[i]);
  }
  e -= dealias(src);
  d.energy = std::move(e);

  detail::remove_mean(d.mass);
  for (int i = 0; i < 3; ++i) detail::remove_mean(d.momentum[i]);
  detail::remove_mean(d.energy);
  return d;
}

/// Steady state from a solution of the stationary problem; fd must be the forcing it solves.
inline SteadyState steady_state(const StationaryState& st, const ForcingData& fd, const Model& m) {
  SteadyState s;
  s.rho = st.rho;
  s.drho = density_increment(m, st.sigma, st.theta);
  s.theta_p = st.theta;
  s.theta = st.theta;
  s.theta += m.params().theta_bar;
  s.v = st.v;
  s.sigma_p = st.sigma;
  detail::fill_steady_cache(s, m);
  s.defect = steady_defect(s, fd, m);
  return s;
}

/// The reference state (rho_bar, 0, theta_bar) with zero forcing.
inline SteadyState constant_steady(const GridPtr& g, const Model& m) {
  return steady_state(StationaryState::zero(g, m), ForcingData::zero(g), m);
}

/// Perturbation of a full state given in stationary variables (P_bar + sigma_p, v, theta_bar + theta_p).
inline PerturbationState to_perturbation(const StationaryState& full, const SteadyState& s, const Model& m) {
  PerturbationState x;
  x.sigma = density_increment(m, full.sigma, full.theta) - s.drho;
  x.w = full.v - s.v;
  x.theta = full.theta - s.theta_p;
  return x;
}

/// max |rho(P_bar + sigma_p, theta_bar + theta_p) - (rho* + sigma)|, evaluated directly from the
/// equation of state. Guards the two meanings of sigma against each other.
inline double convention_defect(const StationaryState& full, const PerturbationState& x, const SteadyState& s, const Model& m) {
  double worst = 0.0;
  const double P0 = m.p_bar(), t0 = m.params().theta_bar;
  for (std::size_t i = 0; i < x.sigma.size(); ++i) {
    const double rho = m.eval(P0 + full.sigma[i], t0 + full.theta[i]).rho;
    worst = std::max(worst, std::abs(rho - (s.rho[i] + x.sigma[i])));
  }
  return worst;
}

// ---------------------------------------------------------------- nonlinear terms

/// Full fields and coefficient deviations X(t) - X* at the current perturbation.
struct CurrentFields {
  ScalarField rho, theta;
  VectorField v;
  ScalarField dA, dB, dD, dE;
};

inline CurrentFields current_fields(const PerturbationState& x, const SteadyState& s, const Model& m) {
  const auto sf = secant_factors(m, s.rho, s.theta, x.sigma, x.theta);
  CurrentFields c;
  c.rho = s.rho + x.sigma;
  c.theta = s.theta + x.theta;
  c.v = s.v + x.w;
  c.dA = times(sf.A1, x.sigma) + times(sf.A2, x.theta);
  c.dB = times(sf.B1, x.sigma) + times(sf.B2, x.theta);
  c.dD = times(sf.D1, x.sigma);
  c.dE = times(sf.E1, x.sigma) + times(sf.E2, x.theta);
  return c;
}

inline VectorField assemble_f(const PerturbationState& x, const SteadyState& s, const ForcingData& fd, const Model& m,
                              const CurrentFields& c) {
  const auto& p = m.params();
  const auto& g = s.grid();
  VectorField f = advect(s.v, x.w);
  f += advect(x.w, c.v);
  f += product(c.dA, s.grad_rho);
  f += product(c.dB, s.grad_theta);
  f *= -1.0;

  // (v/rho - v*/rho*) G = (rho* w - sigma v*) G / (rho* rho)
  // sigma/(rho* rho) [mu Lap + (mu+mu') grad div] v
  const VectorField visc = s.visc_v + viscous_operator(x.w, p);
  VectorField q(g);
  for (int k = 0; k < 3; ++k)
    for (std::size_t i = 0; i < g->size(); ++i) {
      const double rr = s.rho[i] * c.rho[i];
      q[k][i] = ((s.rho[i] * x.w[k][i] - x.sigma[i] * s.v[k][i]) * fd.G[i] + x.sigma[i] * visc[k][i]) / rr;
    }
  f -= dealias(q);
  return f;
}

inline VectorField assemble_f(const PerturbationState& x, const SteadyState& s, const ForcingData& fd, const Model& m) {
  return assemble_f(x, s, fd, m, current_fields(x, s, m));
}

inline ScalarField assemble_h(const PerturbationState& x, const SteadyState& s, const ForcingData& fd, const Model& m,
                              const CurrentFields& c) {
  const auto& p = m.params();
  const auto& g = s.grid();
  ScalarField h = advect(s.v, x.theta);
  h += advect(x.w, c.theta);
  h += product(c.dE, s.div_v);
  h *= -1.0;

  const ScalarField lap = laplacian(s.theta_p) + laplacian(x.theta);
  const ScalarField dheat = dissipation(c.v, p) + capillary_heating(c.rho, c.v, p) - s.heat;
  ScalarField q(g);
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double dD = c.dD[i], D = s.D[i] + dD;
    double v2 = 0.0, wv = 0.0;
    for (int k = 0; k < 3; ++k) {
      v2 += c.v[k][i] * c.v[k][i];
      wv += x.w[k][i] * (2.0 * s.v[k][i] + x.w[k][i]);
    }
    q[i] = dD * (p.alpha_tilde * lap[i] + fd.H[i] + s.heat[i]) + D * dheat[i] +
           0.5 * (dD * v2 + s.D[i] * wv) * fd.G[i] - p.c_v * (dD * c.theta[i] + s.D[i] * x.theta[i]) * fd.G[i];
  }
  h += dealias(q);
  return h;
}

inline ScalarField assemble_h(const PerturbationState& x, const SteadyState& s, const ForcingData& fd, const Model& m) {
  return assemble_h(x, s, fd, m, current_fields(x, s, m));
}

// ---------------------------------------------------------------- time step

struct ImexOptions {
  bool thermal_exchange = true;  // B grad theta and E div w couplings
  bool steady_defect = true;     // subtract the steady state's own residual
  double cfl = 0.5;
};

/// Constant-coefficient implicit block, frozen at (rho_bar, theta_bar).
struct ImplicitBlock {
  double rho, A, B, D, E, mu, mu_prime, kappa, alpha, dt;
  bool exchange;
};

inline ImplicitBlock implicit_block(const Model& m, double dt, bool exchange) {
  const auto& p = m.params();
  const auto c = point_coeffs(m, p.rho_bar, p.theta_bar);
  return {p.rho_bar, c.A, c.B, c.D, c.E, p.mu, p.mu_prime, p.kappa, p.alpha_tilde, dt, exchange};
}

/// Solves the implicit block for one Fourier mode in place. k holds the odd-derivative
/// wavenumbers, k2 the Laplacian symbol.
inline void solve_mode(const ImplicitBlock& b, const std::array<double, 3>& k, double k2, Complex& s, std::array<Complex, 3>& w,
                       Complex& t) {
  const double dt = b.dt;
  const double cw = 1.0 + dt * b.mu * k2 / b.rho;
  const double ct = 1.0 + dt * b.alpha * b.D * k2;
  const double q2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
  if (q2 == 0.0) {
    for (auto& x : w) x /= cw;
    t /= ct;
    return;
  }
  const double q = std::sqrt(q2);
  const std::array<double, 3> n{k[0] / q, k[1] / q, k[2] / q};
  const Complex u = n[0] * w[0] + n[1] * w[1] + n[2] * w[2];
  const double c2 = 1.0 + dt * (b.mu * k2 + (b.mu + b.mu_prime) * q2) / b.rho;
  const double a = b.A + b.kappa * k2;
  const double B = b.exchange ? b.B : 0.0, E = b.exchange ? b.E : 0.0;
  const Complex iq(0.0, q);
  const double den = c2 + dt * dt * q2 * (b.rho * a + B * E / ct);
  const Complex un = (u - dt * a * iq * s - dt * B * iq * t / ct) / den;
  s -= dt * b.rho * iq * un;
  t = (t - dt * E * iq * un) / ct;
  for (int i = 0; i < 3; ++i) w[i] = (w[i] - n[i] * u) / cw + n[i] * un;
}

/// Time derivative (sigma_t, w_t, theta_t) of the perturbation system: frozen linear block plus
/// every explicit term, the step operator without time discretization.
inline PerturbationState perturbation_rate(const PerturbationState& x, const SteadyState& s, const ForcingData& fd, const Model& m,
                                           const ImexOptions& opt = {}) {
  const auto& p = m.params();
  const CurrentFields c = current_fields(x, s, m);
  const ScalarField dw = div(x.w);
  PerturbationState r;
  r.sigma = div(product(s.rho + x.sigma, x.w)) + div(product(x.sigma, s.v));
  r.sigma *= -1.0;

  r.w = assemble_f(x, s, fd, m, c);
  r.w += product(detail::ratio(ScalarField(s.grid(), 1.0), s.rho), viscous_operator(x.w, p));
  r.w -= product(s.A + c.dA, grad(x.sigma));
  r.w.axpy(p.kappa, grad_laplacian(x.sigma));

  r.theta = assemble_h(x, s, fd, m, c);
  r.theta.axpy(p.alpha_tilde, product(s.D, laplacian(x.theta)));
  if (opt.thermal_exchange) {
    r.w -= product(s.B + c.dB, grad(x.theta));
    r.theta -= product(s.E + c.dE, dw);
  }
  if (opt.steady_defect) {
    r.sigma -= s.defect.mass;
    r.w -= s.defect.momentum;
    r.theta -= s.defect.energy;
  }
  r.t = x.t;
  return r;
}

/// Largest admissible step of the explicit part.
inline double cfl_limit(const PerturbationState& x, const SteadyState& s, double cfl = 0.5) {
  const auto& g = *s.grid();
  double dx = 1e300, speed = 0.0;
  for (int a = 0; a < 3; ++a)
    if (g.active(a)) dx = std::min(dx, g.dx(a));
  for (std::size_t i = 0; i < g.size(); ++i) {
    double vs = 0.0, ws = 0.0;
    for (int k = 0; k < 3; ++k) {
      vs += s.v[k][i] * s.v[k][i];
      ws += x.w[k][i] * x.w[k][i];
    }
    speed = std::max(speed, std::sqrt(vs) + std::sqrt(ws));
  }
  return speed > 0.0 ? cfl * dx / speed : 1e300;
}

/// One first-order IMEX Euler step of the perturbation system.
inline PerturbationState imex_step(const PerturbationState& x, const SteadyState& s, const ForcingData& fd, const Model& m, double dt,
                                   const ImexOptions& opt = {}) {
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::InvalidArgument, "time step must be positive");
  const double lim = cfl_limit(x, s, opt.cfl);
  if (dt > lim) {
    std::ostringstream os;
    os << "dt = " << dt << " exceeds the advective limit " << lim;
    fail(ErrorCode::CFLViolation, os.str());
  }
  const auto& p = m.params();
  const auto& g = s.grid();
  const CurrentFields c = current_fields(x, s, m);
  const ImplicitBlock blk = implicit_block(m, dt, opt.thermal_exchange);

  // explicit mass: -div P[(rho* - rho_bar + sigma) w] - div P[v* sigma]
  ScalarField es = div(product(s.drho + x.sigma, x.w));
  es += div(product(x.sigma, s.v));
  es *= -1.0;

  // explicit velocity: f + P[(1/rho* - 1/rho_bar) visc w] - P[(A - A_bar) grad sigma] - P[(B - B_bar) grad theta]
  VectorField ew = assemble_f(x, s, fd, m, c);
  const ScalarField inv_dev = map2(s.drho, s.rho, [&](double d, double r) { return -d / (r * p.rho_bar); });
  ew += product(inv_dev, viscous_operator(x.w, p));
  const ScalarField Adev = map2(s.A, c.dA, [&](double a, double d) { return a - blk.A + d; });
  ew -= product(Adev, grad(x.sigma));

  // explicit temperature: h + alpha P[(D* - D_bar) Lap theta] - P[(E - E_bar) div w]
  ScalarField eh = assemble_h(x, s, fd, m, c);
  const ScalarField Ddev = map(s.D, [&](double d) { return d - blk.D; });
  eh.axpy(p.alpha_tilde, product(Ddev, laplacian(x.theta)));

  if (opt.thermal_exchange) {
    const ScalarField Bdev = map2(s.B, c.dB, [&](double b, double d) { return b - blk.B + d; });
    ew -= product(Bdev, grad(x.theta));
    const ScalarField Edev = map2(s.E, c.dE, [&](double e, double d) { return e - blk.E + d; });
    eh -= product(Edev, div(x.w));
  }
  if (opt.steady_defect) {
    es -= s.defect.mass;
    ew -= s.defect.momentum;
    eh -= s.defect.energy;
  }

  Spectrum ss = fft(x.sigma + dt * es), st = fft(x.theta + dt * eh);
  std::array<Spectrum, 3> sw;
  for (int k = 0; k < 3; ++k) sw[k] = fft(x.w[k] + dt * ew[k]);
  for (std::size_t mi = 0; mi < g->spectral_size(); ++mi) {
    std::array<Complex, 3> w{sw[0][mi], sw[1][mi], sw[2][mi]};
    solve_mode(blk, {g->dxi(mi, 0), g->dxi(mi, 1), g->dxi(mi, 2)}, g->xi2(mi), ss[mi], w, st[mi]);
    for (int k = 0; k < 3; ++k) sw[k][mi] = w[k];
  }
  PerturbationState y;
  y.sigma = ifft(ss);
  y.w = VectorField(ifft(sw[0]), ifft(sw[1]), ifft(sw[2]));
  y.theta = ifft(st);
  y.t = x.t + dt;
  return y;
}

// ---------------------------------------------------------------- energy functional

struct EnergyCoeffs {
  std::array<double, 4> a{1.0, 1.0, 1.0, 1.0};
  std::array<double, 4> b{};
  double B0 = 0.0, B1 = 0.0;
};

/// B0, B1 are the extremes of A_hat, A_tilde, B_tilde and 1 over a 32 x 32 sample of the
/// admissible rectangle; a = 1 and b = min(B0, 1)/8.
inline EnergyCoeffs energy_coeffs(const Model& m) {
  const auto& p = m.params();
  EnergyCoeffs c;
  c.B0 = 1.0;
  c.B1 = 1.0;
  for (int i = 0; i < 32; ++i)
    for (int j = 0; j < 32; ++j) {
      const double r = p.rho_bar * (0.5 + i / 31.0), t = p.theta_bar * (0.5 + j / 31.0);
      const auto q = point_coeffs(m, r, t);
      for (double x : {q.A_hat, q.A_tilde, q.B_tilde}) {
        c.B0 = std::min(c.B0, x);
        c.B1 = std::max(c.B1, x);
      }
    }
  c.b.fill(std::min(c.B0, 1.0) / 8.0);
  return c;
}

/// a nonincreasing in nu and b <= a min(B0, 1)/4.
inline bool admissible(const EnergyCoeffs& c) {
  for (int nu = 0; nu < 4; ++nu) {
    if (!(c.a[nu] > 0.0)) return false;
    if (nu > 0 && c.a[nu] > c.a[nu - 1]) return false;
    if (std::abs(c.b[nu]) > c.a[nu] * std::min(c.B0, 1.0) / 4.0) return false;
  }
  return true;
}

struct EnergyBreakdown {
  double total = 0.0;
  std::array<double, 4> bracket{};
  std::array<double, 4> cross{};
};

/// N = sum_nu a_nu [grad^nu (sigma, w, theta)] + b_nu <grad^nu w, grad^(nu+1) sigma>, where the
/// bracket is ||s||^2 + <A_hat grad s, grad s> + <A_tilde w, w> + <B_tilde t, t> with coefficients at
/// the current (rho, theta).
inline EnergyBreakdown energy_N(const PerturbationState& x, const EnergyCoeffs& k, const SteadyState& s, const Model& m) {
  require(admissible(k), ErrorCode::InvalidArgument, "energy coefficients violate admissibility");
  const auto& g = *x.grid();
  const auto c = evolution_coeffs(m, s.rho + x.sigma, s.theta + x.theta);
  const PointwiseDerivatives ds(x.sigma, 4), dw(x.w, 3), dt(x.theta, 3);
  const double cell = g.cell_volume();
  EnergyBreakdown out;
  for (int nu = 0; nu < 4; ++nu) {
    const auto &s0 = ds.sq(nu), &s1 = ds.sq(nu + 1), &w0 = dw.sq(nu), &t0 = dt.sq(nu);
    double acc = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) acc += s0[i] + c.A_hat[i] * s1[i] + c.A_tilde[i] * w0[i] + c.B_tilde[i] * t0[i];
    out.bracket[nu] = acc * cell;
  }
  const Spectrum ss = fft(x.sigma);
  const std::array<Spectrum, 3> sw{fft(x.w[0]), fft(x.w[1]), fft(x.w[2])};
  for (std::size_t mi = 0; mi < ss.size(); ++mi) {
    double pair = 0.0;
    for (int a = 0; a < 3; ++a) pair += (std::conj(sw[a][mi]) * Complex(0.0, g.dxi(mi, a)) * ss[mi]).real();
    double kp = g.hermitian_weight(mi) * pair * g.volume();
    for (int nu = 0; nu < 4; ++nu, kp *= g.xi2(mi)) out.cross[nu] += kp;
  }
  for (int nu = 0; nu < 4; ++nu) out.total += k.a[nu] * out.bracket[nu] + k.b[nu] * out.cross[nu];
  return out;
}

// ---------------------------------------------------------------- norms of a perturbation

/// ||(sigma, w, theta)||_{4,3,3}
inline double h433(const PerturbationState& x) { return triple_norm(x.sigma, x.w, x.theta, 4, 3, 3); }

/// ||grad (sigma, w, theta)||_{4,3,3}^2
inline double grad_h433_sq(const PerturbationState& x) {
  const double s = std::sqrt(sobolev_seminorm_sq(x.sigma, 1, 5));
  const double w = std::sqrt(sobolev_seminorm_sq(x.w[0], 1, 4) + sobolev_seminorm_sq(x.w[1], 1, 4) + sobolev_seminorm_sq(x.w[2], 1, 4));
  const double t = std::sqrt(sobolev_seminorm_sq(x.theta, 1, 4));
  return (s + w + t) * (s + w + t);
}

inline double linf(const PerturbationState& x) { return std::max({x.sigma.max_abs(), x.w.max_abs(), x.theta.max_abs()}); }

/// Lower and upper equivalence bounds (a3/4) B0 ||x||^2 and 2 a0 ||x||^2.
inline std::pair<double, double> energy_bounds(const EnergyCoeffs& k, double norm433) {
  const double n2 = norm433 * norm433;
  return {k.a[3] / 4.0 * k.B0 * n2, 2.0 * k.a[0] * n2};
}

// ---------------------------------------------------------------- stability run

struct StabilityOptions {
  double t_end = 5.0;
  double dt = 0.02;
  double delta = 1e-3;           // admissible ||init||_{4,3,3}
  double monotone_tol = 1e-8;    // allowed per-step growth of N, relative to N(0)
  double blowup_factor = 10.0;   // norm growth that aborts the run
  ImexOptions imex;
  int snapshot_every = 0;
  std::function<void(const PerturbationState&, int)> on_snapshot;
};

struct LedgerRow {
  double t = 0.0, h433 = 0.0, linf = 0.0, N = 0.0;
  std::array<double, 4> bracket{}, cross{};
  double dissipation = 0.0;  // integral of ||grad x||_{4,3,3}^2 up to t
};

struct EnergyLedger {
  EnergyCoeffs coeffs;
  std::vector<LedgerRow> rows;
  bool monotone = true;
  double worst_increase = 0.0;  // largest N(t_{n+1}) - N(t_n), relative to N(0)
  bool equivalence_ok = true;
  double fitted_C = 0.0;        // max_t (||x||^2 + dissipation) / ||x(0)||^2
  PerturbationState final_state;
};

inline LedgerRow ledger_row(const PerturbationState& x, const EnergyCoeffs& k, const SteadyState& s, const Model& m, double diss) {
  LedgerRow r;
  const auto e = energy_N(x, k, s, m);
  r.t = x.t;
  r.h433 = h433(x);
  r.linf = linf(x);
  r.N = e.total;
  r.bracket = e.bracket;
  r.cross = e.cross;
  r.dissipation = diss;
  return r;
}

inline EnergyLedger run_stability(const PerturbationState& init, const SteadyState& s, const ForcingData& fd, const Model& m,
                                  const StabilityOptions& opt = {}) {
  require(opt.dt > 0.0 && opt.t_end >= 0.0, ErrorCode::InvalidArgument, "need dt > 0 and t_end >= 0");
  const double n0 = h433(init);
  require(n0 <= opt.delta * (1.0 + 1e-12), ErrorCode::InvalidArgument, "initial perturbation exceeds the delta threshold");
  EnergyLedger L;
  L.coeffs = energy_coeffs(m);
  const auto check_bounds = [&](const LedgerRow& r) {
    const auto [lo, hi] = energy_bounds(L.coeffs, r.h433);
    const double slack = 1e-12 * hi;
    if (r.N < lo - slack || r.N > hi + slack) L.equivalence_ok = false;
  };

  PerturbationState x = init;
  double diss = 0.0;
  L.rows.push_back(ledger_row(x, L.coeffs, s, m, diss));
  check_bounds(L.rows.back());
  const double N0 = L.rows.front().N;
  const int steps = int(std::llround(opt.t_end / opt.dt));
  for (int n = 1; n <= steps; ++n) {
    try {
      x = imex_step(x, s, fd, m, opt.dt, opt.imex);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OutOfAdmissibleRange) fail(ErrorCode::BlowUpDetected, e.what());
      throw;
    }
    x.t = n * opt.dt;
    if (!x.finite()) fail(ErrorCode::BlowUpDetected, "non-finite perturbation");
    diss += opt.dt * grad_h433_sq(x);
    LedgerRow r;
    try {
      r = ledger_row(x, L.coeffs, s, m, diss);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::OutOfAdmissibleRange) fail(ErrorCode::BlowUpDetected, e.what());
      throw;
    }
    if (r.h433 > opt.blowup_factor * n0) fail(ErrorCode::BlowUpDetected, "norm grew beyond the blow-up factor");
    const double inc = r.N - L.rows.back().N;
    if (N0 > 0.0) {
      L.worst_increase = std::max(L.worst_increase, inc / N0);
      if (inc > opt.monotone_tol * N0) L.monotone = false;
    }
    check_bounds(r);
    L.rows.push_back(r);
    if (opt.snapshot_every > 0 && opt.on_snapshot && n % opt.snapshot_every == 0) opt.on_snapshot(x, n);
  }
  if (n0 > 0.0)
    for (const auto& r : L.rows) L.fitted_C = std::max(L.fitted_C, (r.h433 * r.h433 + r.dissipation) / (n0 * n0));
  L.final_state = std::move(x);
  return L;
}

/// CSV time series with a header row; full precision for reproducibility.
inline void write_ledger_csv(std::ostream& os, const EnergyLedger& L) {
  os << "t,H433,Linf,N_total";
  for (int i = 0; i < 4; ++i) os << ",N_bracket" << i;
  for (int i = 0; i < 4; ++i) os << ",N_cross" << i;
  os << ",dissipation_integral\n";
  std::ostringstream line;
  line << std::setprecision(17);
  for (const auto& r : L.rows) {
    line.str("");
    line << r.t << ',' << r.h433 << ',' << r.linf << ',' << r.N;
    for (double b : r.bracket) line << ',' << b;
    for (double c : r.cross) line << ',' << c;
    line << ',' << r.dissipation << '\n';
    os << line.str();
  }
}

}  // namespace nsk
