#pragma once

#include <array>
#include <cmath>
#include <map>
#include <string>

#include "nsk/norms.hpp"
#include "nsk/random_fields.hpp"

namespace nsk {

/// External data (G, F, H) = div(G1, F1, H1) + (G2, F2, H2); (div F1)_i = d_j F1_ij.
struct ForcingData {
  ScalarField G;
  VectorField F;
  ScalarField H;
  VectorField G1;
  ScalarField G2;
  TensorField F1;
  VectorField F2;
  VectorField H1;
  ScalarField H2;

  static ForcingData zero(const GridPtr& g) {
    ForcingData fd;
    fd.G = ScalarField(g);
    fd.F = VectorField(g);
    fd.H = ScalarField(g);
    fd.G1 = VectorField(g);
    fd.G2 = ScalarField(g);
    fd.F1 = TensorField(g);
    fd.F2 = VectorField(g);
    fd.H1 = VectorField(g);
    fd.H2 = ScalarField(g);
    return fd;
  }

  const GridPtr& grid() const { return G.grid(); }

  /// Recomputes G, F, H from the parts.
  void reassemble() {
    G = div(G1) + G2;
    F = div(F1) + F2;
    H = div(H1) + H2;
  }

  /// Largest absolute L2 defect of the three decompositions.
  double reassembly_residual() const {
    return std::max({l2_norm(G - div(G1) - G2), l2_norm(F - div(F1) - F2), l2_norm(H - div(H1) - H2)});
  }

  ForcingData scaled(double c) const {
    ForcingData r = *this;
    r.G *= c;
    r.F *= c;
    r.H *= c;
    r.G1 *= c;
    r.G2 *= c;
    for (auto& row : r.F1.c)
      for (auto& x : row) x *= c;
    r.F2 *= c;
    r.H1 *= c;
    r.H2 *= c;
    return r;
  }
};

struct ForcingSpec {
  double amplitude = 1e-4;
  double decay_scale = 5.0;     // s in (1 + |x|^2/s^2)^(-q/2)
  double decay_exponent = 4.0;  // q
  std::uint64_t seed = 1;
  bool g_active = true;
  bool f_active = true;
  bool h_active = true;
};

/// Parts first, then (G, F, H) by reassembly, so the decomposition is exact.
/// Every part is mean free and band-limited to the dealiased band.
inline ForcingData build_forcing(const GridPtr& g, const ForcingSpec& spec) {
  require(spec.decay_scale > 0.0 && spec.decay_exponent > 0.0, ErrorCode::InvalidArgument, "bad forcing decay parameters");
  double half = 1e300;
  for (int a = 0; a < 3; ++a)
    if (g->active(a)) half = std::min(half, 0.5 * g->length(a));
  const double edge = std::pow(1.0 + half * half / (spec.decay_scale * spec.decay_scale), -0.5 * spec.decay_exponent);
  if (edge > 0.01)
    fail(ErrorCode::BoxTooSmall, "forcing tail at the box boundary is " + std::to_string(edge) + " of the peak (limit 0.01)");

  ForcingData fd = ForcingData::zero(g);
  CounterRng root(spec.seed, 0x666F72636500ULL);
  const double s = spec.decay_scale, q = spec.decay_exponent;
  auto part = [&](std::uint64_t id) {
    CounterRng r = root.split(id);
    const double sign = r.uniform() < 0.5 ? -1.0 : 1.0;
    ScalarField f = dealias(mean_free_bump(g, r, s, q));
    f += -f.mean();
    f *= sign * spec.amplitude / std::max(f.max_abs(), 1e-300);
    return f;
  };
  if (spec.amplitude != 0.0) {
    if (spec.g_active) {
      for (int i = 0; i < 3; ++i) fd.G1[i] = part(10 + i);
      fd.G2 = part(13);
    }
    if (spec.f_active) {
      for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) fd.F1(i, j) = part(20 + 3 * i + j);
        fd.F2[i] = part(30 + i);
      }
    }
    if (spec.h_active) {
      for (int i = 0; i < 3; ++i) fd.H1[i] = part(40 + i);
      fd.H2 = part(43);
    }
  }
  fd.reassemble();
  return fd;
}

// ---------------------------------------------------------------- forcing norms

namespace detail {
inline std::vector<const ScalarField*> components(const ForcingData& fd, bool g, bool f, bool h) {
  std::vector<const ScalarField*> c;
  if (g) c.push_back(&fd.G);
  if (f)
    for (int i = 0; i < 3; ++i) c.push_back(&fd.F[i]);
  if (h) c.push_back(&fd.H);
  return c;
}
}  // namespace detail

/// ||U||_L for U = (G, F, H) with its breakdown.
struct ScriptLNorm {
  double total = 0.0;
  std::map<std::string, double> parts;
};

inline ScriptLNorm forcing_norm_L(const ForcingData& fd) {
  const PointwiseDerivatives d(detail::components(fd, true, true, true), 3);
  ScriptLNorm n;
  for (int nu = 1; nu <= 3; ++nu) n.parts["weighted_grad" + std::to_string(nu)] = d.wl2(nu, nu + 1);
  n.parts["linf_U_gradU"] = std::max(d.wlinf(0, 3), d.wlinf(1, 3));
  std::vector<const ScalarField*> u1;
  for (int i = 0; i < 3; ++i) u1.push_back(&fd.G1[i]);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) u1.push_back(&fd.F1(i, j));
  for (int i = 0; i < 3; ++i) u1.push_back(&fd.H1[i]);
  n.parts["linf_U1"] = weighted_linf(u1, 2);
  n.parts["l1_U2"] = weighted_l1({&fd.G2, &fd.F2[0], &fd.F2[1], &fd.F2[2], &fd.H2}, 0);
  for (const auto& [k, v] : n.parts) n.total += v;
  return n;
}

/// Smallness quantities of the forcing.
struct ForcingSmallness {
  double K0 = 0, K = 0, K1 = 0, K2 = 0, K3 = 0;
  double budget = 0;        // K + ||(1+|x|)^{-1} G||_{L1}
  double boundary_tail = 0;  // largest tail fraction among the weighted L2 entries
};

inline ForcingSmallness forcing_smallness(const ForcingData& fd) {
  ForcingSmallness s;
  const PointwiseDerivatives all(detail::components(fd, true, true, true), 3);
  const PointwiseDerivatives gh(detail::components(fd, true, false, true), 4);
  const PointwiseDerivatives gg(detail::components(fd, true, false, false), 2);
  const PointwiseDerivatives ff(detail::components(fd, false, true, false), 1);
  const double top = gh.wl2(4, 4);
  for (int nu = 0; nu <= 3; ++nu) {
    s.K0 += all.wl2(nu, nu + 1);
    s.boundary_tail = std::max(s.boundary_tail, all.wl2_tail(nu, nu + 1));
  }
  s.K0 += top;
  s.boundary_tail = std::max(s.boundary_tail, gh.wl2_tail(4, 4));
  s.K = forcing_norm_L(fd).total + top;
  s.K1 = std::max({ff.wlinf(0, 3), gg.wlinf(0, 3), ff.wlinf(1, 3), gg.wlinf(1, 3)}) +
         weighted_linf({&fd.F1(0, 0), &fd.F1(0, 1), &fd.F1(0, 2), &fd.F1(1, 0), &fd.F1(1, 1), &fd.F1(1, 2), &fd.F1(2, 0),
                        &fd.F1(2, 1), &fd.F1(2, 2)},
                       2) +
         weighted_l1({&fd.F2[0], &fd.F2[1], &fd.F2[2]}, 0);
  s.K2 = gg.wlinf(0, 2) + std::max(gg.wlinf(1, 3), gg.wlinf(2, 3));
  s.K3 = std::max(gh.wlinf(0, 3), gh.wlinf(1, 3)) +
         weighted_linf({&fd.G1[0], &fd.G1[1], &fd.G1[2], &fd.H1[0], &fd.H1[1], &fd.H1[2]}, 2) +
         weighted_l1({&fd.G2, &fd.H2}, 0);
  s.budget = s.K + weighted_l1({&fd.G}, -1);
  return s;
}

}  // namespace nsk
