#pragma once

#include <fftw3.h>

#include <array>
#include <cmath>
#include <complex>
#include <cstddef>
#include <memory>
#include <mutex>
#include <numbers>
#include <string>
#include <vector>

#include "nsk/errors.hpp"

namespace nsk {

using Complex = std::complex<double>;

namespace detail {
// FFTW planning is not thread safe; execution with the new-array API is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

/// Uniform periodic box [0, L1) x [0, L2) x [0, L3), x1 fastest in memory.
/// Axes with a single point are inactive, which gives the 1-D / 2-D debug modes.
class SpectralGrid {
 public:
  SpectralGrid(std::array<int, 3> n, std::array<double, 3> length) : n_(n), len_(length) {
    dims_ = 0;
    for (int a = 0; a < 3; ++a) {
      require(n_[a] >= 1, ErrorCode::InvalidArgument, "grid size must be positive");
      if (n_[a] > 1) {
        require(n_[a] >= 8, ErrorCode::InvalidArgument, "active axes need N >= 8");
        require(n_[a] % 2 == 0, ErrorCode::InvalidArgument, "grid size must be even");
        require(len_[a] > 0.0, ErrorCode::InvalidArgument, "box length must be positive");
        ++dims_;
      }
    }
    require(dims_ >= 1, ErrorCode::InvalidArgument, "grid has no active axis");
    nh_ = n_[0] / 2 + 1;
    npts_ = std::size_t(n_[0]) * n_[1] * n_[2];
    nspec_ = std::size_t(nh_) * n_[1] * n_[2];
    build_tables();
    build_plans();
  }

  /// Cube with `dims` active axes of n points each.
  static std::shared_ptr<const SpectralGrid> cube(int n, double length, int dims = 3) {
    std::array<int, 3> nn{1, 1, 1};
    std::array<double, 3> ll{1.0, 1.0, 1.0};
    for (int a = 0; a < dims; ++a) {
      nn[a] = n;
      ll[a] = length;
    }
    return std::make_shared<const SpectralGrid>(nn, ll);
  }

  SpectralGrid(const SpectralGrid&) = delete;
  SpectralGrid& operator=(const SpectralGrid&) = delete;

  ~SpectralGrid() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    if (fwd_) fftw_destroy_plan(fwd_);
    if (bwd_) fftw_destroy_plan(bwd_);
  }

  int n(int axis) const { return n_[axis]; }
  double length(int axis) const { return len_[axis]; }
  double dx(int axis) const { return len_[axis] / n_[axis]; }
  bool active(int axis) const { return n_[axis] > 1; }
  int dims() const { return dims_; }
  /// Smallest per-axis resolution over active axes.
  int min_n() const {
    int m = 1 << 30;
    for (int a = 0; a < 3; ++a)
      if (active(a)) m = std::min(m, n_[a]);
    return m;
  }

  std::size_t size() const { return npts_; }
  std::size_t spectral_size() const { return nspec_; }
  int nh() const { return nh_; }

  double volume() const {
    double v = 1.0;
    for (int a = 0; a < 3; ++a)
      if (active(a)) v *= len_[a];
    return v;
  }
  double cell_volume() const { return volume() / double(npts_); }

  std::size_t index(int i, int j, int k) const { return std::size_t(i) + std::size_t(n_[0]) * (j + std::size_t(n_[1]) * k); }
  double coord(int axis, int i) const { return active(axis) ? i * dx(axis) : 0.0; }
  double center(int axis) const { return active(axis) ? 0.5 * len_[axis] : 0.0; }
  double half_diagonal() const {
    double s = 0.0;
    for (int a = 0; a < 3; ++a)
      if (active(a)) s += 0.25 * len_[a] * len_[a];
    return std::sqrt(s);
  }

  /// Distance of every grid point from the box center.
  const std::vector<double>& radius() const { return radius_; }
  /// Signed integer mode numbers of spectral entry `s` (x1 uses the half spectrum).
  const std::array<int, 3>& mode(std::size_t s) const { return modes_[s]; }
  /// Wavenumber vector of spectral entry `s`.
  const std::array<double, 3>& xi(std::size_t s) const { return xi_[s]; }
  double xi2(std::size_t s) const { return xi2_[s]; }
  /// Wavenumber used for odd derivatives (Nyquist mode set to zero).
  double dxi(std::size_t s, int axis) const { return dxi_[s][axis]; }
  /// Weight of entry s in Parseval sums over the half spectrum.
  double hermitian_weight(std::size_t s) const { return hweight_[s]; }
  /// Two-thirds rule: modes kept by the dealiasing projection.
  bool keep(std::size_t s) const { return keep_[s] != 0; }
  /// Largest number of derivatives applied to any field at this resolution.
  int derivative_budget() const { return min_n() >= 32 ? 6 : 4; }

  /// Forward transform, normalized so that the zero mode is the mean.
  void forward(const double* in, Complex* out) const {
    std::vector<double> tmp(in, in + npts_);
    fftw_execute_dft_r2c(fwd_, tmp.data(), reinterpret_cast<fftw_complex*>(out));
    const double s = 1.0 / double(npts_);
    for (std::size_t i = 0; i < nspec_; ++i) out[i] *= s;
  }
  /// Inverse transform of a normalized spectrum.
  void backward(const Complex* in, double* out) const {
    std::vector<Complex> tmp(in, in + nspec_);
    fftw_execute_dft_c2r(bwd_, reinterpret_cast<fftw_complex*>(tmp.data()), out);
  }

 private:
  void build_tables() {
    const double two_pi = 2.0 * std::numbers::pi;
    modes_.resize(nspec_);
    xi_.resize(nspec_);
    xi2_.resize(nspec_);
    dxi_.resize(nspec_);
    hweight_.resize(nspec_);
    keep_.resize(nspec_);
    for (int k = 0; k < n_[2]; ++k)
      for (int j = 0; j < n_[1]; ++j)
        for (int i = 0; i < nh_; ++i) {
          const std::size_t s = std::size_t(i) + std::size_t(nh_) * (j + std::size_t(n_[1]) * k);
          std::array<int, 3> m{i, j <= n_[1] / 2 ? j : j - n_[1], k <= n_[2] / 2 ? k : k - n_[2]};
          if (n_[1] == 1) m[1] = 0;
          if (n_[2] == 1) m[2] = 0;
          modes_[s] = m;
          double x2 = 0.0;
          bool kp = true;
          for (int a = 0; a < 3; ++a) {
            const double w = active(a) ? two_pi * m[a] / len_[a] : 0.0;
            xi_[s][a] = w;
            x2 += w * w;
            const bool nyq = active(a) && std::abs(m[a]) * 2 == n_[a];
            dxi_[s][a] = nyq ? 0.0 : w;
            if (active(a) && 3 * std::abs(m[a]) >= n_[a]) kp = false;
          }
          xi2_[s] = x2;
          keep_[s] = kp ? 1 : 0;
          hweight_[s] = (i == 0 || (n_[0] % 2 == 0 && i == n_[0] / 2)) ? 1.0 : 2.0;
        }
    radius_.resize(npts_);
    const double hd = half_diagonal();
    for (int k = 0; k < n_[2]; ++k)
      for (int j = 0; j < n_[1]; ++j)
        for (int i = 0; i < n_[0]; ++i) {
          const double d0 = coord(0, i) - center(0), d1 = coord(1, j) - center(1), d2 = coord(2, k) - center(2);
          radius_[index(i, j, k)] = std::min(std::sqrt(d0 * d0 + d1 * d1 + d2 * d2), hd);
        }
  }

  void build_plans() {
    std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
    std::vector<double> r(npts_);
    std::vector<Complex> c(nspec_);
    auto* cc = reinterpret_cast<fftw_complex*>(c.data());
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    fwd_ = fftw_plan_dft_r2c_3d(n_[2], n_[1], n_[0], r.data(), cc, flags);
    bwd_ = fftw_plan_dft_c2r_3d(n_[2], n_[1], n_[0], cc, r.data(), flags);
    if (!fwd_ || !bwd_) fail(ErrorCode::InvalidArgument, "FFTW planning failed");
  }

  std::array<int, 3> n_;
  std::array<double, 3> len_;
  int dims_ = 0;
  int nh_ = 0;
  std::size_t npts_ = 0, nspec_ = 0;
  std::vector<std::array<int, 3>> modes_;
  std::vector<std::array<double, 3>> xi_;
  std::vector<double> xi2_;
  std::vector<std::array<double, 3>> dxi_;
  std::vector<double> hweight_;
  std::vector<unsigned char> keep_;
  std::vector<double> radius_;
  fftw_plan fwd_ = nullptr;
  fftw_plan bwd_ = nullptr;
};

using GridPtr = std::shared_ptr<const SpectralGrid>;

}  // namespace nsk
