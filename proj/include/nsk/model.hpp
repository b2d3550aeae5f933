#pragma once

#include <array>
#include <cmath>
#include <memory>
#include <sstream>
#include <string>

#include "nsk/spectral.hpp"

namespace nsk {

struct PhysParams {
  double mu = 1.0;
  double mu_prime = 0.0;
  double kappa = 1.0;
  double alpha_tilde = 1.0;
  double c_v = 1.5;
  double rho_bar = 1.0;
  double theta_bar = 1.0;

  void validate() const {
    auto pos = [](double x, const char* name) {
      require(x > 0.0 && std::isfinite(x), ErrorCode::InvalidArgument, std::string(name) + " must be positive");
    };
    pos(mu, "mu");
    pos(kappa, "kappa");
    pos(alpha_tilde, "alpha_tilde");
    pos(c_v, "c_v");
    pos(rho_bar, "rho_bar");
    pos(theta_bar, "theta_bar");
    require(2.0 / 3.0 * mu + mu_prime >= 0.0, ErrorCode::InvalidArgument, "need (2/3) mu + mu_prime >= 0");
  }
};

/// P(rho, theta) with first and second partials, plus the inverse rho(P, theta).
class EquationOfState {
 public:
  virtual ~EquationOfState() = default;
  virtual std::string name() const = 0;
  virtual double pressure(double rho, double theta) const = 0;
  virtual double p_rho(double rho, double theta) const = 0;
  virtual double p_theta(double rho, double theta) const = 0;
  virtual double p_rho_rho(double rho, double theta) const = 0;
  virtual double p_rho_theta(double rho, double theta) const = 0;
  virtual double p_theta_theta(double rho, double theta) const = 0;

  /// Inverse in the first argument. Newton from a linearized guess unless overridden.
  virtual double density(double P, double theta) const {
    double rho = 1.0;
    for (int it = 0; it < 100; ++it) {
      const double r = pressure(rho, theta) - P;
      const double d = r / p_rho(rho, theta);
      rho -= d;
      if (std::abs(d) <= 1e-15 * std::abs(rho)) break;
    }
    return rho;
  }
};

/// P = R rho theta
class IdealGas final : public EquationOfState {
 public:
  explicit IdealGas(double gas_constant = 1.0) : r_(gas_constant) {
    require(r_ > 0.0, ErrorCode::InvalidArgument, "gas constant must be positive");
  }
  std::string name() const override { return "ideal"; }
  double pressure(double rho, double theta) const override { return r_ * rho * theta; }
  double p_rho(double, double theta) const override { return r_ * theta; }
  double p_theta(double rho, double) const override { return r_ * rho; }
  double p_rho_rho(double, double) const override { return 0.0; }
  double p_rho_theta(double, double) const override { return r_; }
  double p_theta_theta(double, double) const override { return 0.0; }
  double density(double P, double theta) const override { return P / (r_ * theta); }
  double gas_constant() const { return r_; }

 private:
  double r_;
};

/// P = R rho theta + K (rho - rho_ref)
class StiffenedGas final : public EquationOfState {
 public:
  StiffenedGas(double gas_constant, double stiffness, double rho_ref) : r_(gas_constant), k_(stiffness), rho0_(rho_ref) {
    require(r_ > 0.0 && k_ >= 0.0, ErrorCode::InvalidArgument, "stiffened gas needs R > 0 and K >= 0");
  }
  std::string name() const override { return "stiffened"; }
  double pressure(double rho, double theta) const override { return r_ * rho * theta + k_ * (rho - rho0_); }
  double p_rho(double, double theta) const override { return r_ * theta + k_; }
  double p_theta(double rho, double) const override { return r_ * rho; }
  double p_rho_rho(double, double) const override { return 0.0; }
  double p_rho_theta(double, double) const override { return r_; }
  double p_theta_theta(double, double) const override { return 0.0; }
  double density(double P, double theta) const override { return (P + k_ * rho0_) / (r_ * theta + k_); }

 private:
  double r_, k_, rho0_;
};

using EosPtr = std::shared_ptr<const EquationOfState>;

/// Parameters plus equation of state; the admissible rectangle is built from the reference state.
class Model {
 public:
  Model(PhysParams p, EosPtr eos) : p_(p), eos_(std::move(eos)) {
    p_.validate();
    require(eos_ != nullptr, ErrorCode::InvalidArgument, "missing equation of state");
    p_bar_ = eos_->pressure(p_.rho_bar, p_.theta_bar);
    require(p_bar_ > 0.0, ErrorCode::InvalidArgument, "reference pressure must be positive");
    for (int i = 0; i < 16; ++i)
      for (int j = 0; j < 16; ++j) {
        const double r = p_.rho_bar * (0.5 + i / 15.0), t = p_.theta_bar * (0.5 + j / 15.0);
        require(eos_->pressure(r, t) > 0 && eos_->p_rho(r, t) > 0 && eos_->p_theta(r, t) > 0, ErrorCode::InvalidArgument,
                "equation of state needs P, P_rho, P_theta > 0 on the admissible rectangle");
      }
    const auto e = eval(p_bar_, p_.theta_bar);
    rho_p_bar_ = e.rho_P;
    rho_t_bar_ = e.rho_theta;
  }

  const PhysParams& params() const { return p_; }
  const EquationOfState& eos() const { return *eos_; }
  const EosPtr& eos_ptr() const { return eos_; }
  double p_bar() const { return p_bar_; }
  double gamma1() const { return p_.rho_bar * rho_p_bar_; }
  double gamma2() const { return p_.rho_bar * rho_t_bar_; }

  static constexpr double kMargin = 0.10;
  /// Admissible rectangle [rho_bar/2, 3 rho_bar/2] x [theta_bar/2, 3 theta_bar/2].
  bool admissible(double rho, double theta, double margin = kMargin) const {
    const double rl = 0.5 * p_.rho_bar * (1.0 - margin), rh = 1.5 * p_.rho_bar * (1.0 + margin);
    const double tl = 0.5 * p_.theta_bar * (1.0 - margin), th = 1.5 * p_.theta_bar * (1.0 + margin);
    return rho >= rl && rho <= rh && theta >= tl && theta <= th;
  }
  void check_admissible(double rho, double theta) const {
    if (!admissible(rho, theta) || !std::isfinite(rho) || !std::isfinite(theta)) {
      std::ostringstream os;
      os << "(rho, theta) = (" << rho << ", " << theta << ") left the admissible rectangle";
      fail(ErrorCode::OutOfAdmissibleRange, os.str());
    }
  }

  struct Eval {
    double rho, rho_P, rho_theta;
  };
  /// rho(P, theta) with both partials.
  Eval eval(double P, double theta) const {
    const double rho = eos_->density(P, theta);
    check_admissible(rho, theta);
    const double pr = eos_->p_rho(rho, theta);
    return {rho, 1.0 / pr, -eos_->p_theta(rho, theta) / pr};
  }

 private:
  PhysParams p_;
  EosPtr eos_;
  double p_bar_ = 0.0, rho_p_bar_ = 0.0, rho_t_bar_ = 0.0;
};

// ---------------------------------------------------------------- stationary coefficients

/// Pointwise coefficients of the stationary system in (P, v, theta) variables.
struct StationaryCoeffs {
  double gamma1 = 0.0, gamma2 = 0.0, c_v = 0.0;

  double eta1(double rho, double theta, double rho_P, double rho_t) const {
    return rho * c_v - theta * rho_t * rho_t / (rho * rho_P);
  }
  double eta2(double rho, double theta, double, double rho_t) const { return theta * rho_t / rho; }
  double eta3(double rho, double theta, double rho_P, double rho_t) const { return theta * rho_t / (rho * rho_P); }
  /// Coefficient of (v . grad) theta once the mass equation is used to eliminate div v.
  /// Equals rho C_V - theta P_theta rho_theta / rho; for an ideal gas this is rho C_P.
  double energy_advection(double rho, double theta, double rho_P, double rho_t) const {
    return rho * c_v + theta * rho_t * rho_t / (rho * rho_P);
  }
};

inline StationaryCoeffs stationary_coeffs(const Model& m) {
  return {m.gamma1(), m.gamma2(), m.params().c_v};
}

/// rho, rho_P, rho_theta sampled from pressure and temperature fields.
struct DensityFields {
  ScalarField rho, rho_P, rho_theta;
};

inline DensityFields density_fields(const Model& m, const ScalarField& P, const ScalarField& theta) {
  DensityFields d{ScalarField(P.grid()), ScalarField(P.grid()), ScalarField(P.grid())};
  for (std::size_t i = 0; i < P.size(); ++i) {
    const auto e = m.eval(P[i], theta[i]);
    d.rho[i] = e.rho;
    d.rho_P[i] = e.rho_P;
    d.rho_theta[i] = e.rho_theta;
  }
  return d;
}

// ---------------------------------------------------------------- evolution coefficients

struct PointCoeffs {
  double A, B, D, E, A_hat, A_tilde, B_tilde;
};

inline PointCoeffs point_coeffs(const Model& m, double rho, double theta) {
  const auto& eos = m.eos();
  const double pr = eos.p_rho(rho, theta), pt = eos.p_theta(rho, theta), cv = m.params().c_v;
  return {pr / rho, pt / rho, 1.0 / (cv * rho), theta * pt / (cv * rho), rho / pr, rho * rho / pr, cv * rho * rho / (theta * pr)};
}

/// Partial derivatives of A, B, D, E in (rho, theta).
struct PointCoeffDerivs {
  double A_r, A_t, B_r, B_t, D_r, E_r, E_t;
};

inline PointCoeffDerivs point_coeff_derivs(const Model& m, double rho, double theta) {
  const auto& eos = m.eos();
  const double pr = eos.p_rho(rho, theta), pt = eos.p_theta(rho, theta);
  const double prr = eos.p_rho_rho(rho, theta), prt = eos.p_rho_theta(rho, theta), ptt = eos.p_theta_theta(rho, theta);
  const double cv = m.params().c_v, r2 = rho * rho;
  return {prr / rho - pr / r2,
          prt / rho,
          prt / rho - pt / r2,
          ptt / rho,
          -1.0 / (cv * r2),
          theta * prt / (cv * rho) - theta * pt / (cv * r2),
          (pt + theta * ptt) / (cv * rho)};
}

struct EvolutionCoeffs {
  ScalarField A, B, D, E, A_hat, A_tilde, B_tilde;
};

inline EvolutionCoeffs evolution_coeffs(const Model& m, const ScalarField& rho, const ScalarField& theta) {
  const auto& g = rho.grid();
  EvolutionCoeffs c{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)};
  for (std::size_t i = 0; i < rho.size(); ++i) {
    m.check_admissible(rho[i], theta[i]);
    const auto p = point_coeffs(m, rho[i], theta[i]);
    c.A[i] = p.A;
    c.B[i] = p.B;
    c.D[i] = p.D;
    c.E[i] = p.E;
    c.A_hat[i] = p.A_hat;
    c.A_tilde[i] = p.A_tilde;
    c.B_tilde[i] = p.B_tilde;
  }
  return c;
}

namespace detail {
// 8-point Gauss-Legendre nodes and weights on [0, 1].
inline const std::array<std::pair<double, double>, 8>& gauss8() {
  static const std::array<std::pair<double, double>, 8> q = [] {
    const double x[4] = {0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
    const double w[4] = {0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    std::array<std::pair<double, double>, 8> r{};
    for (int i = 0; i < 4; ++i) {
      r[2 * i] = {0.5 * (1.0 - x[i]), 0.5 * w[i]};
      r[2 * i + 1] = {0.5 * (1.0 + x[i]), 0.5 * w[i]};
    }
    return r;
  }();
  return q;
}
}  // namespace detail

/// Difference factors so that X(rho*+sigma, theta*+vt) - X(rho*, theta*) = X1 sigma + X2 vt.
/// The path first moves theta at fixed rho*, then rho at the new temperature.
struct SecantFactors {
  ScalarField A1, A2, B1, B2, D1, E1, E2;
};

inline SecantFactors secant_factors(const Model& m, const ScalarField& rho_s, const ScalarField& theta_s, const ScalarField& sigma,
                                    const ScalarField& vt) {
  const auto& g = rho_s.grid();
  SecantFactors f{ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g), ScalarField(g)};
  const auto& q = detail::gauss8();
  for (std::size_t i = 0; i < rho_s.size(); ++i) {
    const double r0 = rho_s[i], t0 = theta_s[i], s = sigma[i], t = vt[i];
    m.check_admissible(r0 + s, t0 + t);
    double a1 = 0, a2 = 0, b1 = 0, b2 = 0, d1 = 0, e1 = 0, e2 = 0;
    for (const auto& [x, w] : q) {
      const auto dt = point_coeff_derivs(m, r0, t0 + x * t);
      a2 += w * dt.A_t;
      b2 += w * dt.B_t;
      e2 += w * dt.E_t;
      const auto dr = point_coeff_derivs(m, r0 + x * s, t0 + t);
      a1 += w * dr.A_r;
      b1 += w * dr.B_r;
      d1 += w * dr.D_r;
      e1 += w * dr.E_r;
    }
    f.A1[i] = a1;
    f.A2[i] = a2;
    f.B1[i] = b1;
    f.B2[i] = b2;
    f.D1[i] = d1;
    f.E1[i] = e1;
    f.E2[i] = e2;
  }
  return f;
}

/// rho(P_bar + sigma, theta_bar + vt) - rho_bar without cancellation: Gauss quadrature of rho_P
/// along sigma at the shifted temperature plus rho_theta along vt at P_bar.
inline ScalarField density_increment(const Model& m, const ScalarField& sigma, const ScalarField& vt) {
  const auto& q = detail::gauss8();
  const double P0 = m.p_bar(), t0 = m.params().theta_bar;
  ScalarField d(sigma.grid());
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    const double s = sigma[i], t = vt[i];
    double a = 0.0, b = 0.0;
    for (const auto& [x, w] : q) {
      if (s != 0.0) a += w * m.eval(P0 + x * s, t0 + t).rho_P;
      if (t != 0.0) b += w * m.eval(P0, t0 + x * t).rho_theta;
    }
    d[i] = a * s + b * t;
  }
  return d;
}

// ---------------------------------------------------------------- stresses and sources

/// Symmetric strain d_ij(v).
inline TensorField strain(const VectorField& v) {
  const TensorField gv = gradient(v);
  TensorField d(v.grid());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) d(i, j) = 0.5 * (gv(i, j) + gv(j, i));
  return d;
}

/// S_ij = (mu' div v - P) delta_ij + 2 mu d_ij(v)
inline TensorField viscous_stress(const VectorField& v, const ScalarField& P, const PhysParams& p) {
  TensorField s = strain(v);
  const ScalarField dv = div(v);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      s(i, j) *= 2.0 * p.mu;
      if (i == j) {
        s(i, j).axpy(p.mu_prime, dv);
        s(i, j) -= P;
      }
    }
  return s;
}

/// K_ij = (kappa/2)(Lap(rho^2) - |grad rho|^2) delta_ij - kappa d_i rho d_j rho
inline TensorField korteweg_stress(const ScalarField& rho, const PhysParams& p) {
  const VectorField gr = grad(rho);
  const ScalarField g2 = dot(gr, gr);
  ScalarField iso = laplacian(product(rho, rho));
  iso -= g2;
  iso *= 0.5 * p.kappa;
  TensorField k(rho.grid());
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j) {
      k(i, j) = -p.kappa * product(gr[i], gr[j]);
      if (i == j) k(i, j) += iso;
      if (j != i) k(j, i) = k(i, j);
    }
  return k;
}

/// Psi(v) = mu' (div v)^2 + 2 mu Dv : Dv
inline ScalarField dissipation(const VectorField& v, const PhysParams& p) {
  const TensorField d = strain(v);
  ScalarField s(v.grid());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) s += times(d(i, j), d(i, j));
  s *= 2.0 * p.mu;
  const ScalarField dv = div(v);
  s.axpy(p.mu_prime, times(dv, dv));
  return dealias(s);
}

/// Phi(rho, v) = kappa (|grad rho|^2/2 + rho Lap rho) div v - kappa (grad rho x grad rho) : grad v
inline ScalarField capillary_heating(const ScalarField& rho, const VectorField& v, const PhysParams& p) {
  const VectorField gr = grad(rho);
  ScalarField a = dot(gr, gr);
  a *= 0.5;
  a += product(rho, laplacian(rho));
  ScalarField r = product(a, div(v));
  const TensorField gv = gradient(v);
  ScalarField c(rho.grid());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) c += times(product(gr[i], gr[j]), gv(i, j));
  r -= dealias(c);
  r *= p.kappa;
  return r;
}

/// div(S v) - v . div S against Psi(v) - P div v; the two agree for every smooth v and P.
struct StressPower {
  ScalarField lhs, rhs;
};

inline StressPower stress_power(const VectorField& v, const ScalarField& P, const PhysParams& p) {
  const TensorField s = viscous_stress(v, P, p);
  const VectorField ds = div(s);
  VectorField sv(v.grid());
  for (int j = 0; j < 3; ++j)
    for (int i = 0; i < 3; ++i) sv[j] += product(s(i, j), v[i]);
  StressPower r{div(sv), dissipation(v, p)};
  r.lhs -= dot(v, ds);
  r.rhs -= product(P, div(v));
  return r;
}

/// mu Lap v + (mu + mu') grad div v
inline VectorField viscous_operator(const VectorField& v, const PhysParams& p) {
  VectorField r = laplacian(v);
  r *= p.mu;
  r.axpy(p.mu + p.mu_prime, grad_div(v));
  return r;
}

}  // namespace nsk
