#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nsk/forcing.hpp"
#include "nsk/model.hpp"
#include "nsk/norms.hpp"

namespace nsk {

/// (P, v, theta) = (P_bar + sigma, v, theta_bar + theta) with div v = div V1 + V2.
struct StationaryState {
  ScalarField sigma;
  VectorField v;
  ScalarField theta;  // temperature perturbation
  ScalarField rho;    // rho(P_bar + sigma, theta_bar + theta)
  VectorField V1;
  ScalarField V2;

  static StationaryState zero(const GridPtr& g, const Model& m) {
    StationaryState s;
    s.sigma = ScalarField(g);
    s.v = VectorField(g);
    s.theta = ScalarField(g);
    s.rho = ScalarField(g, m.params().rho_bar);
    s.V1 = VectorField(g);
    s.V2 = ScalarField(g);
    return s;
  }
  const GridPtr& grid() const { return sigma.grid(); }
};

/// Thermodynamic fields of a state.
struct StateThermo {
  ScalarField rho, rho_P, rho_theta, theta_abs;
  ScalarField drho;  // rho - rho_bar, free of cancellation
};

inline StateThermo state_thermo(const StationaryState& s, const Model& m) {
  ScalarField P = s.sigma;
  P += m.p_bar();
  ScalarField th = s.theta;
  th += m.params().theta_bar;
  auto d = density_fields(m, P, th);
  return {std::move(d.rho), std::move(d.rho_P), std::move(d.rho_theta), std::move(th), density_increment(m, s.sigma, s.theta)};
}

/// Builds a state from perturbations, with rho derived and the trivial witnesses V1 = 0, V2 = div v.
inline StationaryState make_state(const Model& m, ScalarField sigma, VectorField v, ScalarField theta) {
  StationaryState s;
  s.sigma = std::move(sigma);
  s.v = std::move(v);
  s.theta = std::move(theta);
  s.rho = state_thermo(s, m).rho;
  s.V1 = VectorField(s.grid());
  s.V2 = div(s.v);
  return s;
}

/// Discrete (a . grad) s in split form div P[a s] - P[(div a) s]; P is the dealiasing projection.
/// The first part is a divergence, which gives the witness V1 exactly.
inline ScalarField split_advect(const VectorField& a, const ScalarField& s) {
  ScalarField r = div(product(s, a));
  r -= product(div(a), s);
  return r;
}

inline VectorField scaled_field(const ScalarField& c, const VectorField& v) {
  return VectorField(times(c, v[0]), times(c, v[1]), times(c, v[2]));
}

/// kappa P[rho grad Lap rho - g1 grad Lap sigma - g2 grad Lap theta], the part of the Korteweg force
/// beyond its linearization. drho = rho - rho_bar keeps the derivatives free of cancellation.
inline VectorField capillary_remainder(const ScalarField& rho, const ScalarField& drho, const ScalarField& sigma,
                                       const ScalarField& theta, const Model& m) {
  VectorField cap = scaled_field(rho, grad_laplacian(drho));
  cap.axpy(-m.gamma1(), grad_laplacian(sigma));
  cap.axpy(-m.gamma2(), grad_laplacian(theta));
  cap *= m.params().kappa;
  return dealias(cap);
}

/// kappa rho grad Lap rho as linear part plus projected remainder.
inline VectorField capillary_force(const ScalarField& rho, const ScalarField& drho, const ScalarField& sigma,
                                   const ScalarField& theta, const Model& m) {
  VectorField r = capillary_remainder(rho, drho, sigma, theta, m);
  const double k = m.params().kappa;
  r.axpy(k * m.gamma1(), grad_laplacian(sigma));
  r.axpy(k * m.gamma2(), grad_laplacian(theta));
  return r;
}

// ---------------------------------------------------------------- iteration right-hand side

/// Data of the linearized problem produced by one trial state.
struct StationaryRhs {
  VectorField a;  // advection coefficient of sigma in the mass equation
  ScalarField g;
  VectorField f;
  ScalarField h;
};

/// Right-hand side of the iteration system for a trial state. With the mass equation used to
/// eliminate div v, the energy right-hand side is
///   -eta1c (v.grad)theta - eta2 (v.grad)sigma + eta3 G + Psi + Phi + H + |v|^2 G / 2 - C_V theta G
/// where eta1c = rho C_V + theta rho_theta^2 / (rho rho_P).
inline StationaryRhs assemble_T_rhs(const StationaryState& trial, const ForcingData& fd, const Model& m) {
  const auto& p = m.params();
  const auto th = state_thermo(trial, m);
  const auto c = stationary_coeffs(m);
  const auto& g = trial.grid();
  const std::size_t n = g->size();
  ScalarField cP(g), cT(g), e1(g), e2(g), e3(g);
  for (std::size_t i = 0; i < n; ++i) {
    const double r = th.rho[i], t = th.theta_abs[i], rp = th.rho_P[i], rt = th.rho_theta[i];
    cP[i] = rp / r;
    cT[i] = rt / r;
    e1[i] = c.energy_advection(r, t, rp, rt);
    e2[i] = c.eta2(r, t, rp, rt);
    e3[i] = c.eta3(r, t, rp, rt);
  }
  const VectorField& v = trial.v;
  StationaryRhs out;
  out.a = scaled_field(cP, v);

  // mass
  out.g = -split_advect(scaled_field(cT, v), trial.theta);
  out.g += map2(fd.G, th.rho, [](double G, double r) { return G / r; });

  // momentum
  out.f = product(th.rho, advect(v, v));
  out.f *= -1.0;
  // projected as a whole: outside the band the linear part alone acts
  out.f += capillary_remainder(th.rho, th.drho, trial.sigma, trial.theta, m);
  out.f += scaled_field(th.rho, fd.F);
  out.f -= scaled_field(fd.G, v);

  // energy
  out.h = product(e1, advect(v, trial.theta));
  out.h += product(e2, advect(v, trial.sigma));
  out.h *= -1.0;
  out.h += times(e3, fd.G);
  out.h += fd.H;
  out.h += dissipation(v, p);
  out.h += capillary_heating(th.rho, v, p);
  for (std::size_t i = 0; i < n; ++i) {
    const double v2 = v[0][i] * v[0][i] + v[1][i] * v[1][i] + v[2][i] * v[2][i];
    out.h[i] += (0.5 * v2 - p.c_v * th.theta_abs[i]) * fd.G[i];
  }
  return out;
}

// ---------------------------------------------------------------- linearized solve

/// Constant coefficients of the linearized operator.
struct LinearCoeffs {
  double mu, mu_prime, kappa, gamma1, gamma2, alpha;
};

inline LinearCoeffs linear_coeffs(const Model& m) {
  const auto& p = m.params();
  return {p.mu, p.mu_prime, p.kappa, m.gamma1(), m.gamma2(), p.alpha_tilde};
}

/// Linear part applied to a state: (div v + eps(sigma - Lap sigma),
/// -mu Lap v - (mu+mu') grad div v + grad sigma - kappa g1 grad Lap sigma - kappa g2 grad Lap theta + eps v,
/// -alpha Lap theta + eps theta).
struct LinearImage {
  ScalarField mass;
  VectorField momentum;
  ScalarField energy;
};

inline LinearImage apply_linear(const ScalarField& sigma, const VectorField& v, const ScalarField& theta, const LinearCoeffs& c,
                                double eps = 0.0) {
  LinearImage r;
  r.mass = div(v);
  if (eps > 0.0) {
    r.mass.axpy(eps, sigma);
    r.mass.axpy(-eps, laplacian(sigma));
  }
  r.momentum = laplacian(v);
  r.momentum *= -c.mu;
  r.momentum.axpy(-(c.mu + c.mu_prime), grad_div(v));
  r.momentum += grad(sigma);
  r.momentum.axpy(-c.kappa * c.gamma1, grad_laplacian(sigma));
  r.momentum.axpy(-c.kappa * c.gamma2, grad_laplacian(theta));
  if (eps > 0.0) r.momentum.axpy(eps, v);
  r.energy = laplacian(theta);
  r.energy *= -c.alpha;
  if (eps > 0.0) r.energy.axpy(eps, theta);
  return r;
}

struct LinearSolveOptions {
  double eps = 0.0;
  ZeroMode zero_mode = ZeroMode::Error;
  double damping = 0.5;
  double tol = 1e-12;  // H^2 norm of the inner update
  int max_inner = 200;
  const ScalarField* sigma_guess = nullptr;
};

struct LinearSolution {
  ScalarField sigma;
  VectorField v;
  ScalarField theta;
  ScalarField sigma_lagged;  // sigma inside the advection term of the last inner solve
  double m1 = 0.0;           // mean removed from the mass right-hand side
  std::array<double, 3> m2{};
  double m3 = 0.0;
  int inner_iterations = 0;
};

namespace detail {

inline double h2_norm_sq(const Spectrum& s) {
  const auto& g = *s.grid();
  double acc = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    const double k2 = g.xi2(m);
    acc += g.hermitian_weight(m) * (1.0 + k2 + k2 * k2) * std::norm(s[m]);
  }
  return acc * g.volume();
}

}  // namespace detail

/// Solves
///   div v + (a.grad)sigma - eps Lap sigma + eps sigma = g
///   -mu Lap v - (mu+mu') grad div v + grad sigma - kappa g1 grad Lap sigma - kappa g2 grad Lap theta + eps v = f
///   -alpha Lap theta + eps theta = h
/// exactly per Fourier mode for a = 0; the advection term is lagged in a damped Picard loop.
inline LinearSolution solve_linearized(const VectorField& a, const ScalarField& g, const VectorField& f, const ScalarField& h,
                                       const LinearCoeffs& c, const LinearSolveOptions& opt = {}) {
  require(opt.eps >= 0.0, ErrorCode::InvalidArgument, "regularization must be nonnegative");
  const auto& gp = g.grid();
  const auto& G = *gp;
  const std::size_t ns = G.spectral_size();
  const double eps = opt.eps;

  Spectrum gs = fft(g), hs = fft(h);
  std::array<Spectrum, 3> fs{fft(f[0]), fft(f[1]), fft(f[2])};
  LinearSolution out;
  if (eps == 0.0) {
    if (opt.zero_mode == ZeroMode::Error) {
      handle_zero_mode(hs, ZeroMode::Error, "energy right-hand side");
      for (auto& x : fs) handle_zero_mode(x, ZeroMode::Error, "momentum right-hand side");
      handle_zero_mode(gs, ZeroMode::Error, "mass right-hand side");
    }
    out.m3 = hs[0].real();
    for (int i = 0; i < 3; ++i) out.m2[i] = fs[i][0].real();
  }

  // temperature and the sigma-independent part of the velocity
  Spectrum ts(gp);
  std::array<Spectrum, 3> vperp{Spectrum(gp), Spectrum(gp), Spectrum(gp)};
  std::vector<Complex> fpar(ns), b1(ns);
  for (std::size_t m = 0; m < ns; ++m) {
    const double k2 = G.xi2(m);
    if (m == 0 && eps == 0.0) continue;
    ts[m] = hs[m] / (c.alpha * k2 + eps);
    const std::array<double, 3> kd{G.dxi(m, 0), G.dxi(m, 1), G.dxi(m, 2)};
    const double q = std::sqrt(kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2]);
    if (q == 0.0) {
      for (int i = 0; i < 3; ++i) vperp[i][m] = fs[i][m] / (c.mu * k2 + eps);
      continue;
    }
    const Complex fp = (kd[0] * fs[0][m] + kd[1] * fs[1][m] + kd[2] * fs[2][m]) / q;
    fpar[m] = fp;
    for (int i = 0; i < 3; ++i) vperp[i][m] = (fs[i][m] - fp * (kd[i] / q)) / (c.mu * k2 + eps);
    b1[m] = fp - Complex(0.0, c.kappa * c.gamma2 * k2 * q) * ts[m];
  }

  // coupled (sigma, v_parallel) block for a given mass right-hand side
  std::array<Spectrum, 3> vs{Spectrum(gp), Spectrum(gp), Spectrum(gp)};
  auto block = [&](Spectrum& r, Spectrum& sig) {
    if (eps == 0.0) {
      out.m1 = r[0].real();
      r[0] = 0.0;
    }
    for (std::size_t m = 0; m < ns; ++m) {
      const double k2 = G.xi2(m);
      for (int i = 0; i < 3; ++i) vs[i][m] = vperp[i][m];
      if (m == 0) {
        sig[m] = eps > 0.0 ? r[m] / eps : 0.0;
        continue;
      }
      const std::array<double, 3> kd{G.dxi(m, 0), G.dxi(m, 1), G.dxi(m, 2)};
      const double q = std::sqrt(kd[0] * kd[0] + kd[1] * kd[1] + kd[2] * kd[2]);
      if (q == 0.0) {
        sig[m] = eps > 0.0 ? r[m] / (eps * (1.0 + k2)) : 0.0;
        continue;
      }
      const double A11 = c.mu * k2 + (c.mu + c.mu_prime) * q * q + eps;
      const Complex A12(0.0, q * (1.0 + c.kappa * c.gamma1 * k2)), A21(0.0, q);
      const double A22 = eps * (1.0 + k2);
      const Complex det = A11 * A22 - A12 * A21;
      const Complex vp = (b1[m] * A22 - A12 * r[m]) / det;
      sig[m] = (A11 * r[m] - A21 * b1[m]) / det;
      for (int i = 0; i < 3; ++i) vs[i][m] += vp * (kd[i] / q);
    }
  };

  const bool advect = a.max_abs() > 0.0;
  Spectrum sig(gp);
  ScalarField lag(gp);
  if (!advect) {
    Spectrum r = gs;
    block(r, sig);
  } else {
    if (opt.sigma_guess) lag = *opt.sigma_guess;
    double first = -1.0;
    for (int it = 1;; ++it) {
      if (it > opt.max_inner)
        fail(ErrorCode::InnerLoopDiverged, "advection relaxation did not converge in " + std::to_string(opt.max_inner) + " iterations");
      Spectrum r = gs - fft(split_advect(a, lag));
      block(r, sig);
      Spectrum cur = fft(lag);
      Spectrum upd = sig - cur;
      const double du = std::sqrt(detail::h2_norm_sq(upd));
      out.inner_iterations = it;
      if (!std::isfinite(du) || (first > 0.0 && du > 1e6 * first))
        fail(ErrorCode::InnerLoopDiverged, "advection relaxation diverged; advection coefficient too large");
      if (first < 0.0) first = std::max(du, 1e-300);
      if (du < opt.tol || du == 0.0) break;
      upd *= Complex(opt.damping, 0.0);
      cur += upd;
      lag = ifft(cur);
    }
  }
  out.sigma = ifft(sig);
  out.sigma_lagged = advect ? lag : out.sigma;
  out.v = VectorField(ifft(vs[0]), ifft(vs[1]), ifft(vs[2]));
  out.theta = ifft(ts);
  return out;
}

// ---------------------------------------------------------------- solution map T

struct TResult {
  StationaryState state;
  double m1 = 0.0;
  std::array<double, 3> m2{};
  double m3 = 0.0;
  int inner_iterations = 0;
};

/// One outer step: assemble the right-hand side from the trial, solve, rebuild the witnesses
/// V1 = -P[a sigma], V2 = P[(div a) sigma] + g - m1, and re-derive rho.
inline TResult apply_T(const StationaryState& trial, const ForcingData& fd, const Model& m) {
  const StationaryRhs rhs = assemble_T_rhs(trial, fd, m);
  LinearSolveOptions opt;
  opt.zero_mode = ZeroMode::Drop;
  opt.sigma_guess = &trial.sigma;
  LinearSolution sol = solve_linearized(rhs.a, rhs.g, rhs.f, rhs.h, linear_coeffs(m), opt);
  TResult t;
  t.m1 = sol.m1;
  t.m2 = sol.m2;
  t.m3 = sol.m3;
  t.inner_iterations = sol.inner_iterations;
  StationaryState& s = t.state;
  s.sigma = std::move(sol.sigma);
  s.v = std::move(sol.v);
  s.theta = std::move(sol.theta);
  s.V1 = product(sol.sigma_lagged, rhs.a);
  s.V1 *= -1.0;
  s.V2 = product(div(rhs.a), sol.sigma_lagged);
  s.V2 += rhs.g;
  s.V2 += -sol.m1;
  // modes with no odd-derivative wavenumber (Nyquist) carry no divergence and are dropped like the mean
  {
    Spectrum w = fft(s.V2);
    const auto& gr = *s.V2.grid();
    for (std::size_t k = 0; k < w.size(); ++k)
      if (gr.dxi(k, 0) == 0.0 && gr.dxi(k, 1) == 0.0 && gr.dxi(k, 2) == 0.0) w[k] = 0.0;
    s.V2 = ifft(w);
  }
  s.rho = state_thermo(s, m).rho;
  return t;
}

// ---------------------------------------------------------------- residuals

/// Residual of the (P, v, theta) system in the discrete form shared with the iteration:
/// a fixed point of T makes it vanish up to the removed means.
inline LinearImage system_residual(const StationaryState& s, const ForcingData& fd, const Model& m) {
  const StationaryRhs rhs = assemble_T_rhs(s, fd, m);
  LinearImage r = apply_linear(s.sigma, s.v, s.theta, linear_coeffs(m));
  r.mass += split_advect(rhs.a, s.sigma);
  r.mass -= rhs.g;
  r.momentum -= rhs.f;
  r.energy -= rhs.h;
  return r;
}

/// Relative residual of one equation: mean-free L2 size over the largest term, plus the mean.
struct EquationResidual {
  double relative = 0.0;
  double absolute = 0.0;
  double mean = 0.0;
  double scale = 0.0;
};

struct ResidualReport {
  EquationResidual mass, momentum, energy;
  double worst() const { return std::max({mass.relative, momentum.relative, energy.relative}); }
};

namespace detail {

inline EquationResidual measure(std::vector<ScalarField> terms, const std::vector<double>& sign) {
  const auto& g = terms[0].grid();
  ScalarField r(g);
  double scale = 0.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    scale = std::max(scale, l2_norm(terms[i]));
    r.axpy(sign[i], terms[i]);
  }
  EquationResidual e;
  e.mean = r.mean();
  r += -e.mean;
  e.absolute = l2_norm(r);
  e.scale = scale;
  e.relative = scale > 0.0 ? e.absolute / scale : e.absolute;
  return e;
}

inline EquationResidual measure(const std::vector<VectorField>& terms, const std::vector<double>& sign) {
  EquationResidual worst;
  double mean = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::vector<ScalarField> t;
    for (const auto& x : terms) t.push_back(x[c]);
    const auto e = measure(t, sign);
    mean = std::max(mean, std::abs(e.mean));
    worst.absolute = std::hypot(worst.absolute, e.absolute);
    worst.scale = std::hypot(worst.scale, e.scale);
  }
  worst.relative = worst.scale > 0.0 ? worst.absolute / worst.scale : worst.absolute;
  worst.mean = mean;
  return worst;
}

}  // namespace detail

/// Residuals of the original stationary equations in conservative and multiplied forms:
///   div(rho v) = G
///   rho (v.grad)v = mu Lap v + (mu+mu') grad div v - grad P + kappa rho grad Lap rho + rho F - v G
///   rho C_V (v.grad)theta + theta P_theta div v = alpha Lap theta + Psi + Phi + H + |v|^2 G/2 - C_V G theta
/// Recomputed from scratch on the given state.
inline ResidualReport stationary_residuals(const StationaryState& s, const ForcingData& fd, const Model& m) {
  const auto& p = m.params();
  const auto th = state_thermo(s, m);
  const auto& g = s.grid();
  ResidualReport rep;
  rep.mass = detail::measure({div(product(th.rho, s.v)), fd.G}, {1.0, -1.0});

  rep.momentum = detail::measure({product(th.rho, advect(s.v, s.v)), viscous_operator(s.v, p), grad(s.sigma),
                                  capillary_force(th.rho, th.drho, s.sigma, s.theta, m), scaled_field(th.rho, fd.F), scaled_field(fd.G, s.v)},
                                 {1.0, -1.0, 1.0, -1.0, -1.0, 1.0});

  ScalarField tPt(g), v2G(g), cvGt(g), rcv(g);
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double r = th.rho[i], t = th.theta_abs[i];
    tPt[i] = t * m.eos().p_theta(r, t);
    rcv[i] = r * p.c_v;
    v2G[i] = 0.5 * (s.v[0][i] * s.v[0][i] + s.v[1][i] * s.v[1][i] + s.v[2][i] * s.v[2][i]) * fd.G[i];
    cvGt[i] = p.c_v * fd.G[i] * t;
  }
  rep.energy = detail::measure({product(rcv, advect(s.v, s.theta)), product(tPt, div(s.v)), p.alpha_tilde * laplacian(s.theta),
                                dissipation(s.v, p), capillary_heating(th.rho, s.v, p), fd.H, v2G, cvGt},
                               {1.0, 1.0, -1.0, -1.0, -1.0, -1.0, -1.0, 1.0});
  return rep;
}

// ---------------------------------------------------------------- norms of states

inline double lambda_norm(const StationaryState& s) { return lambda_norm(s.sigma, s.v, s.theta); }

/// Distance in the Lambda norm plus the witness distance.
inline double lambda_dot_distance(const StationaryState& a, const StationaryState& b) {
  return lambda_norm(a.sigma - b.sigma, a.v - b.v, a.theta - b.theta) + witness_norm(a.V1 - b.V1, a.V2 - b.V2);
}

inline double lambda_distance(const StationaryState& a, const StationaryState& b) {
  return lambda_norm(a.sigma - b.sigma, a.v - b.v, a.theta - b.theta);
}

/// Named norms of a state; tails are the outer-shell shares of the weighted L2 entries.
inline NormReport norm_report(const StationaryState& s) {
  NormReport r;
  const PointwiseDerivatives ds(s.sigma, 6), dv(s.v, 5), dt(s.theta, 6);
  r.value["I4"] = i_norm(ds, 4);
  r.value["J5"] = j_norm(dv, 5);
  r.value["N5"] = n_norm(dt, 5);
  r.value["Lambda_455"] = r.value["I4"] + r.value["J5"] + r.value["N5"];
  r.value["witness"] = witness_norm(s.V1, s.V2);
  r.value["F_555"] = n_norm(ds, 5) + r.value["J5"] + r.value["N5"];
  r.value["H_433"] = triple_norm(s.sigma, s.v, s.theta, 4, 3, 3);
  r.value["L6"] = std::pow(std::pow(ds.l6(), 6) + std::pow(dv.l6(), 6) + std::pow(dt.l6(), 6), 1.0 / 6.0);
  double ti = 0, tj = 0, tn = 0;
  for (int nu = 1; nu <= 4; ++nu)
    for (int d = 0; d <= 2; ++d) ti = std::max(ti, ds.wl2_tail(nu + d, nu));
  for (int nu = 1; nu <= 5; ++nu) {
    tj = std::max(tj, dv.wl2_tail(nu, nu - 1));
    tn = std::max({tn, dt.wl2_tail(nu, nu - 1), dt.wl2_tail(nu + 1, nu - 1)});
  }
  r.tail["I4"] = ti;
  r.tail["J5"] = tj;
  r.tail["N5"] = tn;
  r.tail["Lambda_455"] = std::max({ti, tj, tn});
  return r;
}

// ---------------------------------------------------------------- fixed point

struct FixedPointOptions {
  double tol = 1e-10;
  int max_outer = 100;
  double budget_threshold = 1e-2;
  bool track_residuals = true;
};

struct IterationRecord {
  int iter = 0;
  double lambda_update = 0.0;
  double contraction_ratio = 0.0;
  double residual_mass = 0.0, residual_momentum = 0.0, residual_energy = 0.0;
  int inner_iterations = 0;
};

struct ConvergenceReport {
  bool converged = false;
  int iterations = 0;
  std::vector<IterationRecord> history;
  ResidualReport residuals;       // original equations, final state
  double system_residual = 0.0;   // shared discrete form, relative
  double mean_defect = 0.0;       // largest mean removed in the last step
  ForcingSmallness smallness;
  double budget_threshold = 0.0;
  bool within_budget = true;
};

struct FixedPointResult {
  StationaryState state;
  ConvergenceReport report;
};

/// Relative size of system_residual (shared discrete form). Means are excluded: on the torus they
/// cannot be matched and are reported as the mean defect.
inline double system_residual_relative(const StationaryState& s, const ForcingData& fd, const Model& m) {
  auto r = system_residual(s, fd, m);
  const auto lin = apply_linear(s.sigma, s.v, s.theta, linear_coeffs(m));
  auto rel = [](double a, double b) { return b > 0.0 ? a / b : a; };
  r.mass += -r.mass.mean();
  for (int i = 0; i < 3; ++i) r.momentum[i] += -r.momentum[i].mean();
  r.energy += -r.energy.mean();
  return std::max({rel(l2_norm(r.mass), l2_norm(fd.G) + l2_norm(lin.mass)), rel(l2_norm(r.momentum), l2_norm(lin.momentum) + l2_norm(fd.F)),
                   rel(l2_norm(r.energy), l2_norm(lin.energy) + l2_norm(fd.H))});
}

/// Iterates T from the zero state (or a given start) until the Lambda update falls below tol.
inline FixedPointResult run_fixed_point(const ForcingData& fd, const Model& m, const FixedPointOptions& opt = {},
                                        const std::optional<StationaryState>& start = std::nullopt) {
  const auto& g = fd.grid();
  FixedPointResult res;
  auto& rep = res.report;
  rep.smallness = forcing_smallness(fd);
  rep.budget_threshold = opt.budget_threshold;
  rep.within_budget = rep.smallness.K <= opt.budget_threshold;
  StationaryState cur = start ? *start : StationaryState::zero(g, m);
  double prev = -1.0;
  int over = 0;
  for (int it = 1; it <= opt.max_outer; ++it) {
    TResult t = apply_T(cur, fd, m);
    IterationRecord rec;
    rec.iter = it;
    rec.lambda_update = lambda_distance(t.state, cur);
    rec.contraction_ratio = prev > 0.0 ? rec.lambda_update / prev : 0.0;
    rec.inner_iterations = t.inner_iterations;
    rep.mean_defect = std::max({std::abs(t.m1), std::abs(t.m2[0]), std::abs(t.m2[1]), std::abs(t.m2[2]), std::abs(t.m3)});
    cur = std::move(t.state);
    if (opt.track_residuals) {
      const auto r = stationary_residuals(cur, fd, m);
      rec.residual_mass = r.mass.relative;
      rec.residual_momentum = r.momentum.relative;
      rec.residual_energy = r.energy.relative;
    }
    rep.history.push_back(rec);
    rep.iterations = it;
    if (!cur.sigma.finite() || !cur.v.finite() || !cur.theta.finite()) fail(ErrorCode::BlowUpDetected, "non-finite iterate");
    if (rec.lambda_update < opt.tol) {
      rep.converged = true;
      break;
    }
    if (prev > 0.0 && rec.contraction_ratio > 0.95) {
      if (++over >= 3)
        fail(ErrorCode::NotContracting, "three consecutive update ratios above 0.95 at iteration " + std::to_string(it));
    } else {
      over = 0;
    }
    prev = rec.lambda_update;
  }
  if (!rep.converged)
    fail(ErrorCode::NotContracting, "no convergence within " + std::to_string(opt.max_outer) + " outer iterations");
  rep.residuals = stationary_residuals(cur, fd, m);
  rep.system_residual = system_residual_relative(cur, fd, m);
  res.state = std::move(cur);
  return res;
}

/// Ratio of the distance between images to the distance between trials (Lambda plus witness terms).
inline double contraction_factor(const StationaryState& t1, const StationaryState& t2, const ForcingData& fd, const Model& m) {
  const double din = lambda_dot_distance(t1, t2);
  if (din == 0.0) return 0.0;
  const auto a = apply_T(t1, fd, m), b = apply_T(t2, fd, m);
  return lambda_dot_distance(a.state, b.state) / din;
}

// ---------------------------------------------------------------- representation path

/// Zero-advection solve through the kernel formulas: v = w + grad p with w the Oseen solve of f,
/// p = E0 * g, sigma from (1 - kappa g1 Lap) sigma = E0 * div f + kappa g2 Lap theta + (2mu+mu') Lap p,
/// theta = E0 * (-h/alpha).
struct RepresentationSolution {
  ScalarField sigma;
  VectorField v;
  ScalarField theta;
  VectorField w;
  ScalarField p;
};

inline RepresentationSolution solve_representation(const ScalarField& g, const VectorField& f, const ScalarField& h,
                                                   const LinearCoeffs& c) {
  RepresentationSolution r;
  ScalarField hh = h;
  hh *= -1.0 / c.alpha;
  r.theta = ifft(newtonian(fft(hh), ZeroMode::Drop));
  r.p = ifft(newtonian(fft(g), ZeroMode::Drop));
  r.w = oseen_solve(f, c.mu, ZeroMode::Drop);
  Spectrum lt = laplacian(fft(r.theta)), lp = laplacian(fft(r.p));
  lt *= c.kappa * c.gamma2;
  lp *= 2.0 * c.mu + c.mu_prime;
  Spectrum rhs = newtonian(div_spectrum(f), ZeroMode::Drop) + lt + lp;
  r.sigma = ifft(bessel(rhs, c.kappa * c.gamma1));
  r.v = r.w + grad(r.p);
  return r;
}

}  // namespace nsk
