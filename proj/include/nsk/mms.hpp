#pragma once

#include "nsk/stationary.hpp"

namespace nsk {

/// Forcing manufactured from an exact stationary state, plus the substitution check.
struct MmsStationary {
  ForcingData fd;
  double system_residual = 0.0;  // shared discrete form, relative
  ResidualReport residuals;      // original equations
};

/// G, F, H such that the exact state solves the stationary system in the discrete form used by
/// the iteration. Parts: G1 = P[rho v], G2 = G - div G1, F2 = F, H2 = H.
inline MmsStationary mms_stationary(const StationaryState& exact, const Model& m) {
  const auto& g = exact.grid();
  const auto th = state_thermo(exact, m);
  const auto c = linear_coeffs(m);
  ForcingData fd = ForcingData::zero(g);

  // mass: div v + (a.grad)sigma + (b.grad)theta = G / rho
  const ScalarField cP = map2(th.rho_P, th.rho, [](double a, double b) { return a / b; });
  const ScalarField cT = map2(th.rho_theta, th.rho, [](double a, double b) { return a / b; });
  ScalarField q1 = div(exact.v);
  q1 += split_advect(scaled_field(cP, exact.v), exact.sigma);
  q1 += split_advect(scaled_field(cT, exact.v), exact.theta);
  fd.G = times(th.rho, q1);

  // momentum and energy with F = H = 0, then solve for them
  const StationaryRhs r0 = assemble_T_rhs(exact, fd, m);
  const LinearImage lin = apply_linear(exact.sigma, exact.v, exact.theta, c);
  for (int i = 0; i < 3; ++i)
    fd.F[i] = map2(lin.momentum[i] - r0.f[i], th.rho, [](double a, double b) { return a / b; });
  fd.H = lin.energy - r0.h;

  fd.G1 = product(th.rho, exact.v);
  fd.G2 = fd.G - div(fd.G1);
  fd.F2 = fd.F;
  fd.H2 = fd.H;

  MmsStationary out;
  out.fd = std::move(fd);
  out.system_residual = system_residual_relative(exact, out.fd, m);
  out.residuals = stationary_residuals(exact, out.fd, m);
  return out;
}

/// Full fields of the time-dependent system with their time derivatives at one instant.
struct FlowFields {
  ScalarField rho;
  VectorField v;
  ScalarField theta;  // absolute temperature
};

struct FlowSources {
  ScalarField G;
  VectorField F;
  ScalarField H;
};

/// Residual of
///   rho_t + div(rho v) = G
///   rho v_t + rho (v.grad)v = mu Lap v + (mu+mu') grad div v - grad P + kappa rho grad Lap rho + rho F - v G
///   rho C_V (theta_t + (v.grad)theta) + theta P_theta div v = alpha Lap theta + Psi + Phi + H + |v|^2 G/2 - C_V G theta
struct FlowResidual {
  ScalarField mass;
  VectorField momentum;
  ScalarField energy;
};

inline FlowResidual flow_residual(const FlowFields& u, const FlowFields& dt, const FlowSources& s, const Model& m) {
  const auto& p = m.params();
  const auto& g = u.rho.grid();
  ScalarField P(g), tPt(g), rcv(g);
  for (std::size_t i = 0; i < g->size(); ++i) {
    P[i] = m.eos().pressure(u.rho[i], u.theta[i]);
    tPt[i] = u.theta[i] * m.eos().p_theta(u.rho[i], u.theta[i]);
    rcv[i] = p.c_v * u.rho[i];
  }
  FlowResidual r;
  r.mass = dt.rho + div(product(u.rho, u.v)) - s.G;

  VectorField acc = dt.v + advect(u.v, u.v);
  r.momentum = product(u.rho, acc);
  r.momentum -= viscous_operator(u.v, p);
  r.momentum += grad(P);
  VectorField cap = product(u.rho, grad_laplacian(u.rho));
  r.momentum.axpy(-p.kappa, cap);
  r.momentum -= scaled_field(u.rho, s.F);
  r.momentum += scaled_field(s.G, u.v);

  r.energy = product(rcv, dt.theta + advect(u.v, u.theta));
  r.energy += product(tPt, div(u.v));
  r.energy.axpy(-p.alpha_tilde, laplacian(u.theta));
  r.energy -= dissipation(u.v, p);
  r.energy -= capillary_heating(u.rho, u.v, p);
  r.energy -= s.H;
  for (std::size_t i = 0; i < g->size(); ++i) {
    const double v2 = u.v[0][i] * u.v[0][i] + u.v[1][i] * u.v[1][i] + u.v[2][i] * u.v[2][i];
    r.energy[i] += (-0.5 * v2 + p.c_v * u.theta[i]) * s.G[i];
  }
  return r;
}

/// Sources that make the given fields an exact solution of the time-dependent system.
inline FlowSources mms_evolution(const FlowFields& u, const FlowFields& dt, const Model& m) {
  const auto& g = u.rho.grid();
  FlowSources zero{ScalarField(g), VectorField(g), ScalarField(g)};
  const FlowResidual r0 = flow_residual(u, dt, zero, m);
  FlowSources s = zero;
  s.G = r0.mass;
  // G enters the momentum and energy residuals linearly
  FlowSources sg = zero;
  sg.G = s.G;
  const FlowResidual r1 = flow_residual(u, dt, sg, m);
  for (int i = 0; i < 3; ++i) s.F[i] = map2(r1.momentum[i], u.rho, [](double a, double b) { return a / b; });
  s.H = r1.energy;
  return s;
}

}  // namespace nsk
