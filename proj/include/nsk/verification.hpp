#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nsk/evolution.hpp"
#include "nsk/kernels.hpp"
#include "nsk/random_fields.hpp"
#include "nsk/stationary.hpp"

namespace nsk {

// ---------------------------------------------------------------- audit records

/// Both sides of one inequality over an ensemble. The unknown constant is reported as the
/// fitted maximum of LHS/RHS; pass means finite, positive, bounded and scale invariant.
struct InequalityAudit {
  std::string id;
  int samples = 0;
  std::vector<double> lhs, rhs;
  double max_ratio = 0.0;
  double min_ratio = 0.0;
  double fitted_constant = 0.0;
  double scale_defect = 0.0;  // relative ratio change under the natural rescaling of the data
  double scale_tol = 0.0;
  double eps = 0.0;           // regularization, where the inequality has one
  double boundary_tail = 0.0; // largest outer-shell share of a weighted norm in the ensemble
  bool pass = false;
  std::string note;

  double ratio(int i) const { return lhs.at(i) / rhs.at(i); }
};

/// Accumulates samples; merging two partial audits is associative.
inline void add_sample(InequalityAudit& a, double lhs, double rhs) {
  a.lhs.push_back(lhs);
  a.rhs.push_back(rhs);
  a.samples = int(a.lhs.size());
}

/// Fills the ratio statistics and the pass flag from the samples and the scale defect.
inline void finalize(InequalityAudit& a) {
  a.samples = int(a.lhs.size());
  a.max_ratio = 0.0;
  a.min_ratio = std::numeric_limits<double>::infinity();
  bool ok = a.samples > 0;
  for (int i = 0; i < a.samples; ++i) {
    const double r = a.ratio(i);
    if (!std::isfinite(r) || !(r > 0.0)) {
      ok = false;
      continue;
    }
    a.max_ratio = std::max(a.max_ratio, r);
    a.min_ratio = std::min(a.min_ratio, r);
  }
  if (!std::isfinite(a.min_ratio)) a.min_ratio = 0.0;
  a.fitted_constant = a.max_ratio;
  a.pass = ok && std::isfinite(a.scale_defect) && a.scale_defect <= a.scale_tol;
}

// ---------------------------------------------------------------- ensembles

/// Random data ensemble: band-limited (top half of the spectrum empty), near-Gaussian decay, mean free.
/// Algebraically decaying fields are not smooth across the periodic boundary and their weighted
/// high-order norms would be set by the box edge.
struct EnsembleSpec {
  int n = 32;
  double length = 8.0 * std::numbers::pi;
  int samples = 64;
  std::uint64_t seed = 1;
  double width = 2.0;          // envelope width of the random bumps
  double decay_exponent = 64;  // q of the bump (1 + |x|^2/s^2)^(-q/2) with s = width sqrt(q)
  double amplitude = 1e-4;     // peak of each data component
  double advection = 1e-2;     // peak of each advection component
  double trial = 1e-5;         // peak of each trial-state component

  GridPtr grid() const { return SpectralGrid::cube(n, length); }
  double scale() const { return width * std::sqrt(decay_exponent); }
  ScalarField scalar(const GridPtr& g, CounterRng& r, double amp) const { return random_smooth(g, r, amp, scale(), true, decay_exponent); }
  VectorField vector(const GridPtr& g, CounterRng& r, double amp) const {
    return random_smooth_vector(g, r, amp, scale(), true, decay_exponent);
  }
};

struct LinearData {
  VectorField a;
  ScalarField g;
  VectorField f;
  ScalarField h;
};

inline LinearData linear_sample(const GridPtr& grid, const EnsembleSpec& e, int i) {
  CounterRng r = CounterRng(e.seed, 0x6C696E00ULL).split(std::uint64_t(i));
  LinearData d;
  d.a = e.vector(grid, r, e.advection);
  d.g = e.scalar(grid, r, e.amplitude);
  d.f = e.vector(grid, r, e.amplitude);
  d.h = e.scalar(grid, r, e.amplitude);
  return d;
}

// ---------------------------------------------------------------- linear estimate

namespace detail {

/// grad(s, v, t) in H^{2,1,2} squared and (s, v, t) in H^{2,1,1} squared.
inline std::array<double, 2> linear_lhs_parts(const ScalarField& s, const VectorField& v, const ScalarField& t) {
  double gv = 0.0, v01 = 0.0;
  for (int i = 0; i < 3; ++i) {
    gv += sobolev_seminorm_sq(v[i], 1, 2);
    v01 += sobolev_seminorm_sq(v[i], 0, 1);
  }
  const double grad_part = sobolev_seminorm_sq(s, 1, 3) + gv + sobolev_seminorm_sq(t, 1, 3);
  const double plain = sobolev_seminorm_sq(s, 0, 2) + v01 + sobolev_seminorm_sq(t, 0, 1);
  return {grad_part, plain};
}

inline std::array<double, 2> linear_estimate_sides(const LinearData& d, const LinearCoeffs& c, double eps) {
  LinearSolveOptions opt;
  opt.eps = eps;
  const LinearSolution s = solve_linearized(d.a, d.g, d.f, d.h, c, opt);
  const auto [gp, pl] = linear_lhs_parts(s.sigma, s.v, s.theta);
  double f2 = 0.0;
  for (int i = 0; i < 3; ++i) f2 += sobolev_seminorm_sq(d.f[i], 0, 0);
  const double data = sobolev_seminorm_sq(d.g, 0, 0) + f2 + sobolev_seminorm_sq(d.h, 0, 0);
  const double grads = sobolev_seminorm_sq(d.g, 1, 1) + sobolev_seminorm_sq(d.h, 1, 1);
  return {gp + eps * pl, data / eps + grads};
}

inline LinearData scaled(const LinearData& d, double c) {
  LinearData r = d;
  r.g *= c;
  r.f *= c;
  r.h *= c;
  return r;
}

}  // namespace detail

/// Regularized linear estimate: LHS |grad(s,v,t)|^2_{2,1,2} + eps |(s,v,t)|^2_{2,1,1} against
/// eps^-1 |(g,f,h)|^2 + |grad(g,h)|^2, solving the regularized system per sample.
inline InequalityAudit audit_linear_estimate(const EnsembleSpec& e, double eps, const Model& m) {
  require(eps > 0.0 && eps < 1.0, ErrorCode::InvalidArgument, "regularization must lie in (0, 1)");
  const GridPtr grid = e.grid();
  const LinearCoeffs c = linear_coeffs(m);
  InequalityAudit a;
  a.id = "2.8";
  a.eps = eps;
  a.scale_tol = 1e-8;
  for (int i = 0; i < e.samples; ++i) {
    const auto [l, r] = detail::linear_estimate_sides(linear_sample(grid, e, i), c, eps);
    add_sample(a, l, r);
  }
  // both sides are quadratic in the data
  const LinearData d0 = linear_sample(grid, e, 0);
  const auto s2 = detail::linear_estimate_sides(detail::scaled(d0, 2.0), c, eps);
  a.scale_defect = a.samples > 0 ? std::abs((s2[0] / s2[1]) / a.ratio(0) - 1.0) : 0.0;
  finalize(a);
  return a;
}

/// Linear estimate over several regularizations; stable when the fitted constants stay within
/// a factor `spread_limit` of each other.
struct EpsilonSweep {
  std::vector<InequalityAudit> audits;
  double spread = 0.0;  // largest over smallest of fitted constant / eps
  double spread_limit = 3.0;
  bool pass = false;
};

inline EpsilonSweep audit_linear_sweep(const EnsembleSpec& e, const Model& m, const std::vector<double>& eps = {0.5, 0.1, 0.02}) {
  EpsilonSweep s;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  bool ok = true;
  for (double x : eps) {
    s.audits.push_back(audit_linear_estimate(e, x, m));
    const auto& a = s.audits.back();
    ok = ok && a.pass;
    // the eps^-1 of the right-hand side factored out
    lo = std::min(lo, a.fitted_constant / x);
    hi = std::max(hi, a.fitted_constant / x);
  }
  s.spread = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  s.pass = ok && !eps.empty() && s.spread < s.spread_limit;
  return s;
}

// ---------------------------------------------------------------- weighted estimates

/// One sample of the iteration problem: a trial state and forcing data.
struct IterationSample {
  StationaryState trial;
  ForcingData fd;
};

inline IterationSample iteration_sample(const GridPtr& grid, const EnsembleSpec& e, const Model& m, int i, double scale = 1.0) {
  CounterRng r = CounterRng(e.seed, 0x697465ULL).split(std::uint64_t(i));
  ScalarField s = e.scalar(grid, r, scale * e.trial);
  VectorField v = e.vector(grid, r, scale * e.trial);
  ScalarField t = e.scalar(grid, r, scale * e.trial);
  ForcingSpec fs;
  fs.amplitude = scale * scale * e.amplitude;
  fs.decay_scale = e.scale();
  fs.decay_exponent = e.decay_exponent;
  fs.seed = e.seed * 1000003ULL + std::uint64_t(i);
  return {make_state(m, std::move(s), std::move(v), std::move(t)), build_forcing(grid, fs)};
}

struct WeightedSides {
  double lhs_280 = 0.0, rhs_280 = 0.0;
  double lhs_240 = 0.0, rhs_240 = 0.0;
  double lhs_290 = 0.0, rhs_290 = 0.0;
};

namespace detail {

/// The data of the iteration problem with the transport terms split off as b.grad c products.
struct SplitData {
  VectorField b1, c1, b2;
  ScalarField c2;
  ScalarField g, h;
  VectorField f;
};

/// max(||(1+|x|)^p grad^k v||_inf, ||(1+|x|)^p grad^k t||_inf)
inline double wlinf_pair(const PointwiseDerivatives& a, const PointwiseDerivatives& b, int k, double p) {
  return std::max(a.wlinf(k, p), b.wlinf(k, p));
}

inline SplitData split_data(const StationaryState& trial, const ForcingData& fd, const Model& m) {
  const auto& p = m.params();
  const StationaryRhs rhs = assemble_T_rhs(trial, fd, m);
  const auto e0 = m.eval(m.p_bar(), p.theta_bar);
  const double eta1 = stationary_coeffs(m).energy_advection(e0.rho, p.theta_bar, e0.rho_P, e0.rho_theta);
  SplitData d;
  d.b1 = trial.v;
  d.b1 *= std::sqrt(p.rho_bar);
  d.c1 = d.b1;
  d.b2 = trial.v;
  d.b2 *= eta1;
  d.c2 = trial.theta;
  d.g = rhs.g;
  d.f = rhs.f;
  d.f += advect(d.b1, d.c1);
  d.h = rhs.h;
  d.h += advect(d.b2, d.c2);
  return d;
}

}  // namespace detail

/// Both sides of the weighted L2 estimates and the weighted Linf estimate for one sample.
/// The solution comes from one application of the solution map; every norm is recomputed here.
inline WeightedSides weighted_sides(const IterationSample& smp, const Model& m) {
  const StationaryState sol = apply_T(smp.trial, smp.fd, m).state;
  const detail::SplitData d = detail::split_data(smp.trial, smp.fd, m);
  WeightedSides w;

  const PointwiseDerivatives ds(sol.sigma, 6), dv(sol.v, 5), dt(sol.theta, 6);
  double sig = 0.0, vel = 0.0, tem = 0.0;
  for (int nu = 1; nu <= 4; ++nu) sig += tuple_l2({ds.wl2_sq(nu, nu), ds.wl2_sq(nu + 1, nu), ds.wl2_sq(nu + 2, nu)});
  for (int nu = 1; nu <= 5; ++nu) {
    vel += dv.wl2(nu, nu - 1);
    tem += tuple_l2({dt.wl2_sq(nu, nu - 1), dt.wl2_sq(nu + 1, nu - 1)});
  }
  const double l6 = std::pow(std::pow(ds.l6(), 6) + std::pow(dv.l6(), 6) + std::pow(dt.l6(), 6), 1.0 / 6.0);
  w.lhs_280 = l6 + sig + vel + tem;

  const double prod = j_norm(d.b1, 5) * j_norm(d.c1, 5) + j_norm(d.b2, 5) * n_norm(d.c2, 5);
  const PointwiseDerivatives gh({&d.g, &d.h}, 4);
  const PointwiseDerivatives fh({&d.f[0], &d.f[1], &d.f[2], &d.h}, 3);
  double data = gh.wl2(0, 1);
  for (int nu = 1; nu <= 4; ++nu) data += gh.wl2(nu, nu);
  for (int nu = 0; nu <= 3; ++nu) data += fh.wl2(nu, nu + 1);
  w.rhs_280 = prod + data;

  // local form at l = 4: the plain gradient enters the right-hand side instead of L6
  double sol_l4 = 0.0;
  for (int nu = 1; nu <= 4; ++nu)
    sol_l4 += tuple_l2({ds.wl2_sq(nu, nu), ds.wl2_sq(nu + 1, nu), ds.wl2_sq(nu + 2, nu)}) +
              tuple_l2({dv.wl2_sq(nu + 1, nu), dt.wl2_sq(nu + 1, nu), dt.wl2_sq(nu + 2, nu)});
  w.lhs_240 = sol_l4;
  double grad0 = ds.wl2_sq(1, 0) + dv.wl2_sq(1, 0) + dt.wl2_sq(1, 0);
  double data240 = 0.0;
  for (int nu = 1; nu <= 4; ++nu) data240 += fh.wl2(nu - 1, nu) + gh.wl2(nu, nu);
  w.rhs_240 = std::sqrt(grad0) + prod + data240;

  double linf = 0.0;
  for (int nu = 0; nu <= 1; ++nu) linf += ds.wlinf(nu, 2) + detail::wlinf_pair(dv, dt, nu, nu + 1);
  linf += detail::wlinf_pair(dv, dt, 2, 2);
  w.lhs_290 = linf;
  const double eps = lambda_norm(smp.trial) + witness_norm(smp.trial.V1, smp.trial.V2);
  w.rhs_290 = eps * eps + forcing_smallness(smp.fd).K;
  return w;
}


/// Audits of the weighted L2 estimates (local form "2.40" at l = 4 and global form "2.80") and
/// of the weighted Linf estimate "2.90", sharing one solve per sample. The natural rescaling is
/// trial x2 with forcing x4, under which both sides of each estimate scale alike.
struct IterationAudits {
  InequalityAudit local, global, linf;
};

inline IterationAudits audit_iteration_estimates(const EnsembleSpec& e, const Model& m) {
  const GridPtr grid = e.grid();
  IterationAudits r;
  r.local.id = "2.40";
  r.global.id = "2.80";
  r.linf.id = "2.90";
  double tail = 0.0;
  for (auto* a : {&r.local, &r.global, &r.linf}) a->scale_tol = 1e-2;
  for (int i = 0; i < e.samples; ++i) {
    const IterationSample smp = iteration_sample(grid, e, m, i);
    const WeightedSides w = weighted_sides(smp, m);
    add_sample(r.local, w.lhs_240, w.rhs_240);
    add_sample(r.global, w.lhs_280, w.rhs_280);
    add_sample(r.linf, w.lhs_290, w.rhs_290);
    tail = std::max(tail, forcing_smallness(smp.fd).boundary_tail);
  }
  if (e.samples > 0) {
    const WeightedSides w2 = weighted_sides(iteration_sample(grid, e, m, 0, 2.0), m);
    r.local.scale_defect = std::abs((w2.lhs_240 / w2.rhs_240) / r.local.ratio(0) - 1.0);
    r.global.scale_defect = std::abs((w2.lhs_280 / w2.rhs_280) / r.global.ratio(0) - 1.0);
    r.linf.scale_defect = std::abs((w2.lhs_290 / w2.rhs_290) / r.linf.ratio(0) - 1.0);
  }
  for (auto* a : {&r.local, &r.global, &r.linf}) {
    a->boundary_tail = tail;
    finalize(*a);
  }
  return r;
}

/// Weighted L2 estimates: returns the local ("2.40") and global ("2.80") audits.
inline std::array<InequalityAudit, 2> audit_weighted_estimate(const EnsembleSpec& e, const Model& m) {
  auto r = audit_iteration_estimates(e, m);
  return {std::move(r.local), std::move(r.global)};
}

inline InequalityAudit audit_Linf_estimate(const EnsembleSpec& e, const Model& m) { return audit_iteration_estimates(e, m).linf; }

// ---------------------------------------------------------------- kernel decay

/// Smallest C with |d^alpha K(x)| <= C / |x|^{|alpha|+1} over sampled points, per kernel and order.
struct KernelDecayEntry {
  std::string kernel;
  int order = 0;
  double constant = 0.0;
  double homogeneity_defect = 0.0;  // spread of |x|^{|alpha|+1} |d^alpha K| along a ray, relative to the constant
  double doubled_constant = 0.0;    // max |K(2x)| |x| for order 0: half the constant
};

struct KernelDecayReport {
  double mu = 1.0;
  std::vector<KernelDecayEntry> entries;
  bool pass = false;

  const KernelDecayEntry& find(const std::string& kernel, int order) const {
    for (const auto& x : entries)
      if (x.kernel == kernel && x.order == order) return x;
    fail(ErrorCode::InvalidArgument, "no kernel entry " + kernel);
  }
};

namespace detail {

/// Lattice directions plus seeded random unit vectors.
inline std::vector<std::array<double, 3>> sample_directions(std::uint64_t seed, int random) {
  std::vector<std::array<double, 3>> d;
  for (int a = -1; a <= 1; ++a)
    for (int b = -1; b <= 1; ++b)
      for (int c = -1; c <= 1; ++c)
        if (a || b || c) d.push_back({double(a), double(b), double(c)});
  CounterRng r(seed, 0x6B6572ULL);
  for (int i = 0; i < random; ++i) d.push_back({r.normal(), r.normal(), r.normal()});
  for (auto& x : d) {
    const double n = std::sqrt(x[0] * x[0] + x[1] * x[1] + x[2] * x[2]);
    for (double& c : x) c /= n;
  }
  return d;
}

template <class K>
KernelDecayEntry decay_entry(const std::string& name, int order, K&& k, const std::vector<std::array<double, 3>>& dirs,
                             const std::vector<double>& radii) {
  KernelDecayEntry e;
  e.kernel = name;
  e.order = order;
  std::vector<std::array<int, 2>> alphas;
  if (order == 0) alphas.push_back({-1, -1});
  if (order == 1)
    for (int p = 0; p < 3; ++p) alphas.push_back({p, -1});
  if (order == 2)
    for (int p = 0; p < 3; ++p)
      for (int q = p; q < 3; ++q) alphas.push_back({p, q});
  double spread = 0.0;
  for (const auto& d : dirs)
    for (const auto& al : alphas) {
      double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
      for (double r : radii) {
        const std::array<double, 3> x{r * d[0], r * d[1], r * d[2]};
        const double v = std::abs(kernel_derivative(k, x, al[0], al[1])) * std::pow(r, order + 1);
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        if (order == 0) {
          const std::array<double, 3> x2{2 * x[0], 2 * x[1], 2 * x[2]};
          e.doubled_constant = std::max(e.doubled_constant, std::abs(kernel_derivative(k, x2)) * r);
        }
      }
      e.constant = std::max(e.constant, hi);
      spread = std::max(spread, hi - lo);
    }
  e.homogeneity_defect = e.constant > 0.0 ? spread / e.constant : 0.0;
  return e;
}

}  // namespace detail

/// Decay constants of the Newtonian potential and each Oseen component for |alpha| <= 2 by exact
/// (hyper-dual) differentiation on radii 1e-2 .. 1e2.
inline KernelDecayReport audit_kernel_decay(double mu = 1.0, std::uint64_t seed = 1) {
  KernelDecayReport rep;
  rep.mu = mu;
  const auto dirs = detail::sample_directions(seed, 32);
  std::vector<double> radii;
  for (int i = -4; i <= 4; ++i) radii.push_back(std::pow(10.0, 0.5 * i));
  for (int o = 0; o <= 2; ++o)
    rep.entries.push_back(detail::decay_entry("E0", o, [](const auto& y) { return newtonian_kernel(y); }, dirs, radii));
  for (int i = 0; i < 3; ++i)
    for (int j = i; j < 3; ++j)
      for (int o = 0; o <= 2; ++o)
        rep.entries.push_back(detail::decay_entry("E" + std::to_string(i + 1) + std::to_string(j + 1), o,
                                                  [=](const auto& y) { return oseen_kernel(i, j, y, mu); }, dirs, radii));
  bool ok = true;
  const double c0 = 1.0 / (4.0 * std::numbers::pi);
  for (const auto& e : rep.entries) {
    ok = ok && std::isfinite(e.constant) && e.constant > 0.0 && e.homogeneity_defect < 1e-10;
    if (e.order == 0) {
      ok = ok && std::abs(e.doubled_constant - 0.5 * e.constant) <= 1e-12 * e.constant;
      ok = ok && e.constant <= (e.kernel == "E0" ? c0 : c0 / mu) * (1.0 + 1e-12);
    }
  }
  rep.pass = ok && std::abs(rep.find("E0", 0).constant - c0) <= 1e-12 * c0;
  return rep;
}

// ---------------------------------------------------------------- regularization limit

/// Regularized solves against the unregularized one on fixed data; distances in H^1.
struct RegularizationReport {
  std::vector<double> eps;
  std::vector<double> gap;         // ||x_eps - x_0||_{H1}
  std::vector<double> successive;  // ||x_eps(k) - x_eps(k-1)||_{H1}, first entry 0
  double limit_norm = 0.0;         // ||x_0||_{H1}
  double relative_gap = 0.0;       // last gap over limit_norm
  double tol = 1e-6;
  bool monotone = false;
  bool pass = false;
};

namespace detail {
inline double h1_distance(const LinearSolution& a, const LinearSolution& b) {
  double s = sobolev_seminorm_sq(a.sigma - b.sigma, 0, 1) + sobolev_seminorm_sq(a.theta - b.theta, 0, 1);
  for (int i = 0; i < 3; ++i) s += sobolev_seminorm_sq(a.v[i] - b.v[i], 0, 1);
  return std::sqrt(s);
}
inline ScalarField band_mean_free(const ScalarField& f) {
  ScalarField r = half_band(f);
  r += -r.mean();
  return r;
}
}  // namespace detail

/// Data (g, f, h) = (G, F, H) restricted to the half band with means removed, so that the
/// unregularized problem is solvable; `a` is the advection coefficient (zero by default).
/// The tolerance is absolute: the gap is linear in eps and proportional to the data.
inline RegularizationReport audit_regularization_limit(const ForcingData& fd, const Model& m,
                                                       const std::vector<double>& eps = {1e-1, 1e-2, 1e-3, 1e-4},
                                                       const VectorField* a = nullptr) {
  const GridPtr& grid = fd.grid();
  const ScalarField g = detail::band_mean_free(fd.G), h = detail::band_mean_free(fd.H);
  const VectorField f(detail::band_mean_free(fd.F[0]), detail::band_mean_free(fd.F[1]), detail::band_mean_free(fd.F[2]));
  const VectorField adv = a ? *a : VectorField(grid);
  const LinearCoeffs c = linear_coeffs(m);
  LinearSolveOptions opt;
  opt.zero_mode = ZeroMode::Drop;
  const LinearSolution x0 = solve_linearized(adv, g, f, h, c, opt);
  const LinearSolution zero{ScalarField(grid), VectorField(grid), ScalarField(grid), ScalarField(grid)};
  RegularizationReport rep;
  rep.limit_norm = detail::h1_distance(x0, zero);
  rep.eps = eps;
  std::optional<LinearSolution> prev;
  for (double e : eps) {
    opt.eps = e;
    LinearSolution x = solve_linearized(adv, g, f, h, c, opt);
    rep.gap.push_back(detail::h1_distance(x, x0));
    rep.successive.push_back(prev ? detail::h1_distance(x, *prev) : 0.0);
    prev = std::move(x);
  }
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.gap.size(); ++i) rep.monotone = rep.monotone && rep.gap[i] <= rep.gap[i - 1];
  for (std::size_t i = 2; i < rep.successive.size(); ++i)
    rep.monotone = rep.monotone && rep.successive[i] <= rep.successive[i - 1];
  if (!rep.gap.empty() && rep.limit_norm > 0.0) rep.relative_gap = rep.gap.back() / rep.limit_norm;
  rep.pass = rep.monotone && !rep.gap.empty() && std::isfinite(rep.gap.back()) && rep.gap.back() < rep.tol;
  return rep;
}

// ---------------------------------------------------------------- decay

/// Energy-decay audit of a completed stability run: per row, ||x||^2 + integral of the
/// dissipation against ||x(0)||^2, with the per-step monotonicity of N and the equivalence
/// bounds recomputed from the ledger columns.
struct DecayAudit {
  InequalityAudit estimate;  // "3.3"
  bool monotone = true;      // "3.51"
  double worst_increase = 0.0;
  bool equivalence_ok = true;
  bool pass = false;
};

inline DecayAudit audit_decay(const EnergyLedger& L, double monotone_tol = 1e-8) {
  DecayAudit d;
  d.estimate.id = "3.3";
  require(!L.rows.empty(), ErrorCode::InvalidArgument, "empty energy ledger");
  const double n0 = L.rows.front().h433, N0 = L.rows.front().N;
  for (std::size_t i = 0; i < L.rows.size(); ++i) {
    const auto& r = L.rows[i];
    add_sample(d.estimate, r.h433 * r.h433 + r.dissipation, n0 * n0);
    if (i > 0) {
      const double inc = r.N - L.rows[i - 1].N;
      if (N0 > 0.0) d.worst_increase = std::max(d.worst_increase, inc / N0);
      if (inc > monotone_tol * N0) d.monotone = false;
    }
    const auto [lo, hi] = energy_bounds(L.coeffs, r.h433);
    const double slack = 1e-12 * hi;
    if (r.N < lo - slack || r.N > hi + slack) d.equivalence_ok = false;
  }
  if (n0 == 0.0) {
    // zero run: nothing may grow
    bool still = true;
    for (const auto& r : L.rows) still = still && r.h433 == 0.0 && r.N == 0.0;
    d.estimate.samples = int(L.rows.size());
    d.pass = still;
    return d;
  }
  finalize(d.estimate);
  d.pass = d.estimate.pass && d.monotone && d.equivalence_ok;
  return d;
}

/// Fitted decay constants across an amplitude sweep; stable when max/min - 1 < limit.
struct DecaySweep {
  std::vector<double> constants;
  double variation = 0.0;
  double limit = 0.25;
  bool pass = false;
};

inline DecaySweep audit_decay_sweep(const std::vector<EnergyLedger>& runs, double limit = 0.25) {
  DecaySweep s;
  s.limit = limit;
  bool ok = !runs.empty();
  for (const auto& L : runs) {
    const DecayAudit a = audit_decay(L);
    ok = ok && a.pass;
    s.constants.push_back(a.estimate.fitted_constant);
  }
  if (!s.constants.empty()) {
    const auto [lo, hi] = std::minmax_element(s.constants.begin(), s.constants.end());
    s.variation = *lo > 0.0 ? *hi / *lo - 1.0 : std::numeric_limits<double>::infinity();
  }
  s.pass = ok && s.variation < limit;
  return s;
}

}  // namespace nsk

namespace nsk {

/// Forcing of the ensemble rescaled so that its smallness budget K equals `budget`.
inline ForcingData small_forcing(const EnsembleSpec& e, double budget = 1e-2) {
  ForcingSpec fs;
  fs.decay_scale = e.scale();
  fs.decay_exponent = e.decay_exponent;
  fs.seed = e.seed;
  const ForcingData fd = build_forcing(e.grid(), fs);
  const double K = forcing_smallness(fd).K;
  return K > 0.0 ? fd.scaled(budget / K) : fd;
}

}  // namespace nsk
