// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <string>
#include <vector>

#include "nsk/mms.hpp"
#include "nsk/scenarios.hpp"
#include "nsk/verification.hpp"

using namespace nsk;
using Clock = std::chrono::steady_clock;

namespace {

const Clock::time_point kStart = Clock::now();

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Model ideal() { return Model(PhysParams{}, std::make_shared<IdealGas>(1.0)); }

/// Small-forcing scenario shared by criteria 2 to 5: N = 32, L = 40, forcing peak 4e-8 (K about 8e-3).
const double kForcingPeak = 4e-8;
GridPtr scenario_grid() { return SpectralGrid::cube(32, 40.0); }
ForcingData scenario_forcing(const GridPtr& g, double peak = kForcingPeak) {
  ForcingSpec s;
  s.amplitude = peak;
  return build_forcing(g, s);
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char b[512];
  std::snprintf(b, sizeof b, f, args...);
  return b;
}

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
  std::printf("criterion %d %s: %s | %s\n", id, o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

template <class F>
void run(int id, const char* name, F&& f) {
  try {
    report(id, name, f());
  } catch (const std::exception& e) {
    report(id, name, {false, std::string("exception: ") + e.what()});
  }
}

// ---------------------------------------------------------------- 1. manufactured recovery

Outcome mms_recovery() {
  const auto t0 = Clock::now();
  const auto g = SpectralGrid::cube(32, 16.0 * std::numbers::pi);
  const Model m = ideal();
  const StationaryState exact = random_stationary_state(g, m, CounterRng(1, kStreamMms), 1e-3, 5.0);
  const MmsStationary mms = mms_stationary(exact, m);
  FixedPointOptions o;
  o.tol = 1e-10 * lambda_norm(exact);
  const auto r = run_fixed_point(mms.fd, m, o);
  const double err = lambda_distance(r.state, exact) / lambda_norm(exact);
  const double t = seconds_since(t0);
  return {r.report.converged && err < 1e-6 && t < 120.0,
          fmt("relative Lambda error %.2e (< 1e-6), %d iterations, %.1f s (< 120 s)", err, r.report.iterations, t)};
}

// ---------------------------------------------------------------- 2. contraction

Outcome contraction() {
  const auto g = scenario_grid();
  const Model m = ideal();
  const ForcingData full = scenario_forcing(g), half = scenario_forcing(g, 0.5 * kForcingPeak);
  const double K = forcing_smallness(full).K;
  // trials live in a ball whose radius scales with the forcing, ten times its peak
  double worst = 0.0, worst_half = 0.0;
  bool decreasing = true;
  for (int k = 0; k < 10; ++k) {
    const CounterRng root(1, kStreamPairs);
    auto pair = [&](double scale) {
      return std::pair{random_stationary_state(g, m, root.split(2 * k), 10 * scale * kForcingPeak, 5.0),
                       random_stationary_state(g, m, root.split(2 * k + 1), 10 * scale * kForcingPeak, 5.0)};
    };
    const auto [a, b] = pair(1.0);
    const auto [ah, bh] = pair(0.5);
    const double q = contraction_factor(a, b, full, m), qh = contraction_factor(ah, bh, half, m);
    worst = std::max(worst, q);
    worst_half = std::max(worst_half, qh);
    decreasing = decreasing && qh < q;
  }
  const auto r = run_fixed_point(full, m);
  const double last = r.report.history.back().lambda_update;
  const bool pass = K <= 1e-2 && worst <= 0.5 && decreasing && r.report.converged && r.report.iterations <= 30 && last < 1e-10;
  return {pass, fmt("K %.2e (<= 1e-2), max factor %.2e (<= 0.5), halved forcing max %.2e (every pair decreases: %s), "
                    "%d iterations (<= 30) to update %.1e (< 1e-10)",
                    K, worst, worst_half, decreasing ? "yes" : "no", r.report.iterations, last)};
}

// ---------------------------------------------------------------- 3. equilibrium preservation

struct Scenario {
  GridPtr g;
  Model m = ideal();
  ForcingData fd;
  SteadyState s;
};

const Scenario& scenario() {
  static const Scenario sc = [] {
    Scenario x;
    x.g = scenario_grid();
    x.fd = scenario_forcing(x.g);
    x.s = steady_state(run_fixed_point(x.fd, x.m).state, x.fd, x.m);
    return x;
  }();
  return sc;
}

Outcome equilibrium() {
  const auto& sc = scenario();
  PerturbationState x = PerturbationState::zero(sc.g);
  for (int n = 0; n < 100; ++n) x = imex_step(x, sc.s, sc.fd, sc.m, 0.05);
  const double d = h433(x);
  return {d < 1e-8, fmt("||change||_{4,3,3} after 100 steps %.2e (< 1e-8), steady |v*| %.2e", d, sc.s.v.max_abs())};
}

// ---------------------------------------------------------------- 4. energy decay

Outcome energy_decay() {
  const auto& sc = scenario();
  StabilityOptions opt;
  opt.dt = 0.05;
  opt.t_end = 5.0;
  opt.delta = 1e-3;
  bool monotone = true, bounds = true;
  double worst_inc = 0.0, worst_linf = 0.0;
  std::vector<EnergyLedger> halvings;
  PerturbationState first;
  for (int k = 0; k < 5; ++k) {
    const PerturbationState x0 = random_perturbation(sc.g, CounterRng(1, kStreamInit).split(k), 1e-3, 2.0);
    const EnergyLedger L = run_stability(x0, sc.s, sc.fd, sc.m, opt);
    monotone = monotone && L.monotone;
    bounds = bounds && L.equivalence_ok;
    worst_inc = std::max(worst_inc, L.worst_increase);
    worst_linf = std::max(worst_linf, L.rows.back().linf / L.rows.front().linf);
    if (k == 0) {
      first = x0;
      halvings.push_back(L);
    }
  }
  double c = 1.0;
  for (int h = 1; h <= 4; ++h) {
    c *= 0.5;
    PerturbationState x = first;
    x.sigma *= c;
    x.w *= c;
    x.theta *= c;
    halvings.push_back(run_stability(x, sc.s, sc.fd, sc.m, opt));
  }
  const DecaySweep sw = audit_decay_sweep(halvings);
  // end-time share (||x(T)||^2 + dissipation) / ||x(0)||^2, reported alongside the supremum
  double lo = 1e300, hi = 0.0;
  for (const auto& L : halvings) {
    const auto& r = L.rows.back();
    const double v = (r.h433 * r.h433 + r.dissipation) / (L.rows.front().h433 * L.rows.front().h433);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const bool pass = monotone && bounds && worst_linf < 0.2 && sw.pass;
  return {pass, fmt("5 inits: N nonincreasing %s (worst step %.1e N0, tol 1e-8), Linf(5)/Linf(0) max %.3f (< 0.2); "
                    "4 halvings: fitted C %.4f..%.4f, variation %.2e (< 0.25), end-time share %.4f..%.4f",
                    monotone ? "yes" : "no", worst_inc, worst_linf,
                    *std::min_element(sw.constants.begin(), sw.constants.end()),
                    *std::max_element(sw.constants.begin(), sw.constants.end()), sw.variation, lo, hi)};
}

// ---------------------------------------------------------------- 5. structural identities

Outcome identities() {
  const auto g = SpectralGrid::cube(32, 20.0);
  PhysParams p;
  p.kappa = 0.7;
  p.mu = 0.9;
  p.mu_prime = 0.4;
  double kort = 0.0, energy = 0.0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    CounterRng rng(1, 0x6B6F7274ULL);
    rng = rng.split(k);
    ScalarField rho = random_smooth(g, rng, 0.2, 2.0, true);
    rho += 1.0;
    const VectorField lhs = div(korteweg_stress(rho, p));
    const VectorField gl = grad_laplacian(rho);
    VectorField rhs(g);
    for (int i = 0; i < 3; ++i) rhs[i] = p.kappa * product(rho, gl[i]);
    kort = std::max(kort, l2_norm(lhs - rhs) / l2_norm(rhs));

    // a band of N/6 keeps every product of the stress power inside the dealiased band
    const VectorField raw = random_smooth_vector(g, rng, 0.3, 2.0);
    const VectorField v(band_limited(raw[0], 6), band_limited(raw[1], 6), band_limited(raw[2], 6));
    ScalarField P = band_limited(random_smooth(g, rng, 0.2, 2.0), 6);
    P += 1.0;
    const auto e = stress_power(v, P, p);
    energy = std::max(energy, l2_norm(e.lhs - e.rhs) / l2_norm(e.rhs));
  }
  const auto& sc = scenario();
  const auto k = energy_coeffs(sc.m);
  int inside = 0;
  double lo_margin = 1e300, hi_margin = 1e300;
  for (std::uint64_t i = 0; i < 50; ++i) {
    const double norm = 1e-3 * std::pow(0.5, double(i % 5));
    const double width = 1.5 + 0.5 * double(i % 4);
    const auto x = random_perturbation(sc.g, CounterRng(1, 0x6571756976ULL).split(i), norm, width);
    const auto [lo, hi] = energy_bounds(k, h433(x));
    const double N = energy_N(x, k, sc.s, sc.m).total;
    if (lo <= N && N <= hi) ++inside;
    lo_margin = std::min(lo_margin, N / lo);
    hi_margin = std::min(hi_margin, hi / N);
  }
  const bool pass = kort < 1e-9 && energy < 1e-9 && inside == 50;
  return {pass, fmt("Korteweg divergence max rel %.1e, energy form max rel %.1e (< 1e-9, 20 fields each); "
                    "equivalence %d/50 inside, min N/lower %.2f, min upper/N %.2f",
                    kort, energy, inside, lo_margin, hi_margin)};
}

// ---------------------------------------------------------------- 6. two-path solver equality

Outcome two_paths() {
  const auto g = SpectralGrid::cube(32, 20.0);
  PhysParams p;
  p.mu_prime = 0.3;
  p.kappa = 0.8;
  const Model m(p, std::make_shared<IdealGas>(1.0));
  const auto c = linear_coeffs(m);
  double worst = 0.0;
  for (std::uint64_t k = 0; k < 10; ++k) {
    CounterRng rng = CounterRng(1, 0x72657072ULL).split(k);
    const ScalarField gg = random_smooth(g, rng, 1e-3, 2.0), h = random_smooth(g, rng, 1e-3, 2.0);
    const VectorField f = random_smooth_vector(g, rng, 1e-3, 2.0);
    const auto a = solve_linearized(VectorField(g), gg, f, h, c);
    const auto b = solve_representation(gg, f, h, c);
    worst = std::max(worst, lambda_norm(a.sigma - b.sigma, a.v - b.v, a.theta - b.theta) / lambda_norm(a.sigma, a.v, a.theta));
  }
  const auto lg = SpectralGrid::cube(32, 16.0 * std::numbers::pi);
  std::size_t mismatches = 0;
  for (double gamma : {0.25, 0.7, 1.0, 3.0}) {
    const auto sym = bessel_symbol(gamma);
    for (std::size_t s = 0; s < lg->spectral_size(); ++s)
      if (sym.value(lg->xi(s), lg->xi2(s)) != 1.0 / (1.0 + gamma * lg->xi2(s))) ++mismatches;
  }
  return {worst < 1e-9 && mismatches == 0,
          fmt("max rel Lambda difference %.1e (< 1e-9, 10 instances); Bessel symbol mismatches %zu of %zu lattice values",
              worst, mismatches, 4 * lg->spectral_size())};
}

// ---------------------------------------------------------------- 7. inequality audits

Outcome audits() {
  const Model m = ideal();
  EnsembleSpec e;  // N = 32, 64 samples
  const EpsilonSweep lin = audit_linear_sweep(e, m);
  const IterationAudits it = audit_iteration_estimates(e, m);
  const RegularizationReport reg = audit_regularization_limit(small_forcing(e), m);
  bool ok = lin.pass && reg.pass && reg.eps.back() == 1e-4;
  std::string d = fmt("2.8: C/eps %.3f %.3f %.3f spread %.2f (< 3), scale defect %.0e", lin.audits[0].fitted_constant / lin.audits[0].eps,
                      lin.audits[1].fitted_constant / lin.audits[1].eps, lin.audits[2].fitted_constant / lin.audits[2].eps, lin.spread,
                      std::max({lin.audits[0].scale_defect, lin.audits[1].scale_defect, lin.audits[2].scale_defect}));
  for (const auto* a : {&it.local, &it.global, &it.linf}) {
    ok = ok && a->pass && a->samples == 64;
    d += fmt("; %s: ratio %.2e..%.2e, scale defect %.0e", a->id.c_str(), a->min_ratio, a->max_ratio, a->scale_defect);
  }
  d += fmt("; regularization gap at eps=1e-4 %.1e (< 1e-6)", reg.gap.back());
  const double total = seconds_since(kStart);
  ok = ok && total < 900.0;
  d += fmt("; suite %.0f s (< 900 s)", total);
  return {ok, d};
}

}  // namespace

int main() {
  run(1, "manufactured stationary recovery", mms_recovery);
  run(2, "contraction in the small-forcing regime", contraction);
  run(3, "equilibrium preservation", equilibrium);
  run(4, "energy decay", energy_decay);
  run(5, "structural identities and energy equivalence", identities);
  run(6, "two-path solver equality", two_paths);
  run(7, "inequality audits", audits);
  std::printf("%d of 7 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
