#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "nsk/spectral.hpp"

namespace nsk {

/// Multi-indices of total order k with their multinomial multiplicities,
/// restricted to the active axes of the grid.
inline std::vector<std::pair<std::array<int, 3>, double>> multi_indices(int k, const SpectralGrid& g) {
  std::vector<std::pair<std::array<int, 3>, double>> r;
  auto fact = [](int n) {
    double f = 1.0;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
  };
  for (int a = 0; a <= k; ++a)
    for (int b = 0; b <= k - a; ++b) {
      const int c = k - a - b;
      if ((a && !g.active(0)) || (b && !g.active(1)) || (c && !g.active(2))) continue;
      r.push_back({{a, b, c}, fact(k) / (fact(a) * fact(b) * fact(c))});
    }
  return r;
}

inline void check_budget(const SpectralGrid& g, int k) {
  if (k > g.derivative_budget())
    fail(ErrorCode::DerivativeBudgetExceeded,
         "requested " + std::to_string(k) + " derivatives, budget is " + std::to_string(g.derivative_budget()));
}

/// Pointwise |grad^nu u|^2 (full tensor, every ordered index) and max_alpha |d^alpha u|,
/// for nu = 0..max_order. Vector fields combine components.
class PointwiseDerivatives {
 public:
  PointwiseDerivatives(const std::vector<const ScalarField*>& comps, int max_order) {
    require(!comps.empty(), ErrorCode::InvalidArgument, "no components");
    const auto& g = comps[0]->grid();
    check_budget(*g, max_order);
    grid_ = g;
    sq_.assign(max_order + 1, ScalarField(g));
    mx_.assign(max_order + 1, ScalarField(g));
    for (const ScalarField* c : comps) {
      const Spectrum s = fft(*c);
      for (int k = 0; k <= max_order; ++k)
        for (const auto& [al, mult] : multi_indices(k, *g)) {
          const ScalarField d = k == 0 ? *c : ifft(derivative(s, al));
          auto& sq = sq_[k];
          auto& mx = mx_[k];
          for (std::size_t i = 0; i < d.size(); ++i) {
            sq[i] += mult * d[i] * d[i];
            mx[i] = std::max(mx[i], std::abs(d[i]));
          }
        }
    }
    for (const ScalarField* c : comps) {
      double s6 = 0.0;
      for (double x : c->values()) s6 += std::pow(std::abs(x), 6);
      l6_pow_ += s6 * g->cell_volume();
    }
  }
  explicit PointwiseDerivatives(const ScalarField& f, int max_order) : PointwiseDerivatives(std::vector<const ScalarField*>{&f}, max_order) {}
  explicit PointwiseDerivatives(const VectorField& v, int max_order)
      : PointwiseDerivatives(std::vector<const ScalarField*>{&v[0], &v[1], &v[2]}, max_order) {}

  int max_order() const { return int(sq_.size()) - 1; }
  const ScalarField& sq(int k) const { return sq_.at(k); }
  const ScalarField& mx(int k) const { return mx_.at(k); }
  double l6() const { return std::pow(l6_pow_, 1.0 / 6.0); }

  /// Square of ||(1+|x|)^p grad^k u||_{L2}.
  double wl2_sq(int k, double p) const {
    const auto& r = grid_->radius();
    const auto& s = sq_.at(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) acc += std::pow(1.0 + r[i], 2.0 * p) * s[i];
    return acc * grid_->cell_volume();
  }
  double wl2(int k, double p) const { return std::sqrt(wl2_sq(k, p)); }
  /// ||(1+|x|)^p grad^k u||_{Linf}
  double wlinf(int k, double p) const {
    const auto& r = grid_->radius();
    const auto& m = mx_.at(k);
    double acc = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) acc = std::max(acc, std::pow(1.0 + r[i], p) * m[i]);
    return acc;
  }
  /// Share of the weighted L2 integral coming from the outer shell of the box.
  double wl2_tail(int k, double p) const {
    const auto& r = grid_->radius();
    const auto& s = sq_.at(k);
    const double shell = tail_radius(*grid_);
    double all = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
      const double x = std::pow(1.0 + r[i], 2.0 * p) * s[i];
      all += x;
      if (r[i] >= shell) tail += x;
    }
    return all > 0.0 ? tail / all : 0.0;
  }
  /// Ratio of the weighted sup over the outer shell to the global weighted sup.
  double wlinf_tail(int k, double p) const {
    const auto& r = grid_->radius();
    const auto& m = mx_.at(k);
    const double shell = tail_radius(*grid_);
    double all = 0.0, tail = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const double x = std::pow(1.0 + r[i], p) * m[i];
      all = std::max(all, x);
      if (r[i] >= shell) tail = std::max(tail, x);
    }
    return all > 0.0 ? tail / all : 0.0;
  }

  /// Points with distance from the center at least 90% of the smallest half-length.
  static double tail_radius(const SpectralGrid& g) {
    double h = 1e300;
    for (int a = 0; a < 3; ++a)
      if (g.active(a)) h = std::min(h, 0.5 * g.length(a));
    return 0.9 * h;
  }

 private:
  GridPtr grid_;
  std::vector<ScalarField> sq_, mx_;
  double l6_pow_ = 0.0;
};

// ---------------------------------------------------------------- plain norms

/// ||u||_{L^p} with the component convention (sum_i ||u_i||_p^p)^(1/p).
inline double lp_norm(const std::vector<const ScalarField*>& comps, double p) {
  double acc = 0.0;
  for (const auto* c : comps) {
    double s = 0.0;
    for (double x : c->values()) s += std::pow(std::abs(x), p);
    acc += s * c->grid()->cell_volume();
  }
  return std::pow(acc, 1.0 / p);
}
inline double lp_norm(const ScalarField& f, double p) { return lp_norm({&f}, p); }
inline double lp_norm(const VectorField& v, double p) { return lp_norm({&v[0], &v[1], &v[2]}, p); }

inline double linf_norm(const ScalarField& f) { return f.max_abs(); }
inline double linf_norm(const VectorField& v) { return v.max_abs(); }

/// ||(1+|x|)^p u||_{L1}; negative p allowed.
inline double weighted_l1(const std::vector<const ScalarField*>& comps, double p) {
  double acc = 0.0;
  for (const auto* c : comps) {
    const auto& r = c->grid()->radius();
    for (std::size_t i = 0; i < c->size(); ++i) acc += std::pow(1.0 + r[i], p) * std::abs((*c)[i]);
  }
  return comps.empty() ? 0.0 : acc * comps[0]->grid()->cell_volume();
}

/// ||(1+|x|)^p u||_{Linf} over components.
inline double weighted_linf(const std::vector<const ScalarField*>& comps, double p) {
  double acc = 0.0;
  for (const auto* c : comps) {
    const auto& r = c->grid()->radius();
    for (std::size_t i = 0; i < c->size(); ++i) acc = std::max(acc, std::pow(1.0 + r[i], p) * std::abs((*c)[i]));
  }
  return acc;
}

/// Square of ||grad^l u||_{L2} summed over l = lo..hi, via Parseval.
inline double sobolev_seminorm_sq(const ScalarField& f, int lo, int hi) {
  const auto& g = *f.grid();
  check_budget(g, hi);
  const Spectrum s = fft(f);
  double acc = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    const double k2 = g.xi2(m);
    double w = 0.0, kp = std::pow(k2, lo);
    for (int l = lo; l <= hi; ++l, kp *= k2) w += kp;
    acc += g.hermitian_weight(m) * w * std::norm(s[m]);
  }
  return acc * g.volume();
}

/// H^k norm ||u||_k = (sum_{l<=k} ||grad^l u||^2)^(1/2).
inline double sobolev_norm(const ScalarField& f, int k) { return std::sqrt(sobolev_seminorm_sq(f, 0, k)); }
inline double sobolev_norm(const VectorField& v, int k) {
  return std::sqrt(sobolev_seminorm_sq(v[0], 0, k) + sobolev_seminorm_sq(v[1], 0, k) + sobolev_seminorm_sq(v[2], 0, k));
}

/// ||(s, v, t)||_{j,k,l} = ||s||_j + ||v||_k + ||t||_l
inline double triple_norm(const ScalarField& s, const VectorField& v, const ScalarField& t, int j, int k, int l) {
  return sobolev_norm(s, j) + sobolev_norm(v, k) + sobolev_norm(t, l);
}

// ---------------------------------------------------------------- weighted norms

inline double tuple_l2(std::initializer_list<double> sq) {
  double s = 0.0;
  for (double x : sq) s += x;
  return std::sqrt(s);
}

/// ||u||_{L6} + sum_{nu=0}^{1} ||(1+|x|)^{nu+1} grad^nu u||_inf + ||(1+|x|)^2 grad^2 u||_inf
inline double jhat_norm(const PointwiseDerivatives& d) {
  return d.l6() + d.wlinf(0, 1) + d.wlinf(1, 2) + d.wlinf(2, 2);
}

inline double i_norm(const PointwiseDerivatives& d, int k) {
  double s = d.l6();
  for (int nu = 1; nu <= k; ++nu) s += tuple_l2({d.wl2_sq(nu, nu), d.wl2_sq(nu + 1, nu), d.wl2_sq(nu + 2, nu)});
  return s + d.wlinf(0, 2) + d.wlinf(1, 2);
}

inline double j_norm(const PointwiseDerivatives& d, int k) {
  double s = jhat_norm(d);
  for (int nu = 1; nu <= k; ++nu) s += d.wl2(nu, nu - 1);
  return s;
}

inline double n_norm(const PointwiseDerivatives& d, int k) {
  double s = jhat_norm(d);
  for (int nu = 1; nu <= k; ++nu) s += tuple_l2({d.wl2_sq(nu, nu - 1), d.wl2_sq(nu + 1, nu - 1)});
  return s;
}

inline double i_norm(const ScalarField& f, int k) { return i_norm(PointwiseDerivatives(f, k + 2), k); }
inline double j_norm(const VectorField& v, int k) { return j_norm(PointwiseDerivatives(v, std::max(k, 2)), k); }
inline double j_norm(const ScalarField& f, int k) { return j_norm(PointwiseDerivatives(f, std::max(k, 2)), k); }
inline double n_norm(const ScalarField& f, int k) { return n_norm(PointwiseDerivatives(f, k + 1), k); }
inline double jhat_norm(const ScalarField& f) { return jhat_norm(PointwiseDerivatives(f, 2)); }
inline double jhat_norm(const VectorField& v) { return jhat_norm(PointwiseDerivatives(v, 2)); }

/// ||s||_{I^j} + ||v||_{J^k} + ||t||_{N^l}
inline double lambda_norm(const ScalarField& s, const VectorField& v, const ScalarField& t, int j = 4, int k = 5, int l = 5) {
  return i_norm(s, j) + j_norm(v, k) + n_norm(t, l);
}

/// Witness part of the divergence decomposition div v = div V1 + V2.
inline double witness_norm(const VectorField& V1, const ScalarField& V2) {
  return weighted_linf({&V1[0], &V1[1], &V1[2]}, 3) + weighted_l1({&V2}, -1);
}

/// Membership test for the divergence-decomposed velocity class.
struct DotLambdaCheck {
  bool member = false;
  double witness = 0.0;   // weighted size of (V1, V2)
  double mismatch = 0.0;  // L2 defect of div v = div V1 + V2
};

inline DotLambdaCheck check_dot_lambda(const VectorField& v, const VectorField& V1, const ScalarField& V2, double eps,
                                       double tol = 1e-10) {
  DotLambdaCheck c;
  c.mismatch = l2_norm(div(v) - div(V1) - V2);
  if (c.mismatch > tol)
    fail(ErrorCode::DecompositionMismatch, "div v - div V1 - V2 has L2 norm " + std::to_string(c.mismatch));
  c.witness = witness_norm(V1, V2);
  c.member = c.witness <= eps;
  return c;
}

/// Named norm values with their boundary-tail fractions.
struct NormReport {
  std::map<std::string, double> value;
  std::map<std::string, double> tail;
};

}  // namespace nsk
