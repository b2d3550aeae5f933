#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <vector>

#include "nsk/grid.hpp"

namespace nsk {

/// Real samples of a periodic scalar on a grid.
class ScalarField {
 public:
  ScalarField() = default;
  explicit ScalarField(GridPtr g, double value = 0.0) : grid_(std::move(g)), v_(grid_->size(), value) {}
  ScalarField(GridPtr g, std::vector<double> values) : grid_(std::move(g)), v_(std::move(values)) {
    require(v_.size() == grid_->size(), ErrorCode::InvalidArgument, "field size does not match grid");
  }

  const GridPtr& grid() const { return grid_; }
  std::size_t size() const { return v_.size(); }
  double& operator[](std::size_t i) { return v_[i]; }
  double operator[](std::size_t i) const { return v_[i]; }
  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  double mean() const {
    double s = 0.0;
    for (double x : v_) s += x;
    return s / double(v_.size());
  }
  double max_abs() const {
    double m = 0.0;
    for (double x : v_) m = std::max(m, std::abs(x));
    return m;
  }
  bool finite() const {
    return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
  }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (double& x : v_) x *= s;
    return *this;
  }
  ScalarField& operator+=(double s) {
    for (double& x : v_) x += s;
    return *this;
  }
  /// this += s * o
  ScalarField& axpy(double s, const ScalarField& o) {
    for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += s * o.v_[i];
    return *this;
  }

 private:
  GridPtr grid_;
  std::vector<double> v_;
};

inline ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
inline ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
inline ScalarField operator*(double s, ScalarField a) { return a *= s; }
inline ScalarField operator-(ScalarField a) { return a *= -1.0; }

/// Pointwise product without dealiasing.
inline ScalarField times(const ScalarField& a, const ScalarField& b) {
  ScalarField r(a.grid());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = a[i] * b[i];
  return r;
}

template <class F>
ScalarField map(const ScalarField& a, F&& f) {
  ScalarField r(a.grid());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = f(a[i]);
  return r;
}

template <class F>
ScalarField map2(const ScalarField& a, const ScalarField& b, F&& f) {
  ScalarField r(a.grid());
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = f(a[i], b[i]);
  return r;
}

/// Normalized Fourier coefficients over the r2c half spectrum.
class Spectrum {
 public:
  Spectrum() = default;
  explicit Spectrum(GridPtr g) : grid_(std::move(g)), c_(grid_->spectral_size(), Complex(0.0, 0.0)) {}

  const GridPtr& grid() const { return grid_; }
  std::size_t size() const { return c_.size(); }
  Complex& operator[](std::size_t i) { return c_[i]; }
  const Complex& operator[](std::size_t i) const { return c_[i]; }
  Complex* data() { return c_.data(); }
  const Complex* data() const { return c_.data(); }

  Spectrum& operator+=(const Spectrum& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
    return *this;
  }
  Spectrum& operator-=(const Spectrum& o) {
    for (std::size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
    return *this;
  }
  Spectrum& operator*=(Complex s) {
    for (auto& x : c_) x *= s;
    return *this;
  }

 private:
  GridPtr grid_;
  std::vector<Complex> c_;
};

inline Spectrum operator+(Spectrum a, const Spectrum& b) { return a += b; }
inline Spectrum operator-(Spectrum a, const Spectrum& b) { return a -= b; }

inline Spectrum fft(const ScalarField& f) {
  Spectrum s(f.grid());
  f.grid()->forward(f.data(), s.data());
  return s;
}

inline ScalarField ifft(const Spectrum& s) {
  ScalarField f(s.grid());
  s.grid()->backward(s.data(), f.data());
  return f;
}

/// Three components of a vector field.
struct VectorField {
  std::array<ScalarField, 3> c;

  VectorField() = default;
  explicit VectorField(const GridPtr& g, double value = 0.0) : c{ScalarField(g, value), ScalarField(g, value), ScalarField(g, value)} {}
  VectorField(ScalarField a, ScalarField b, ScalarField d) : c{std::move(a), std::move(b), std::move(d)} {}

  ScalarField& operator[](int i) { return c[i]; }
  const ScalarField& operator[](int i) const { return c[i]; }
  const GridPtr& grid() const { return c[0].grid(); }

  VectorField& operator+=(const VectorField& o) {
    for (int i = 0; i < 3; ++i) c[i] += o.c[i];
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    for (int i = 0; i < 3; ++i) c[i] -= o.c[i];
    return *this;
  }
  VectorField& operator*=(double s) {
    for (auto& x : c) x *= s;
    return *this;
  }
  VectorField& axpy(double s, const VectorField& o) {
    for (int i = 0; i < 3; ++i) c[i].axpy(s, o.c[i]);
    return *this;
  }
  double max_abs() const { return std::max({c[0].max_abs(), c[1].max_abs(), c[2].max_abs()}); }
  bool finite() const { return c[0].finite() && c[1].finite() && c[2].finite(); }
};

inline VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
inline VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
inline VectorField operator*(double s, VectorField a) { return a *= s; }

/// Row-major 3x3 field of scalars.
struct TensorField {
  std::array<std::array<ScalarField, 3>, 3> c;

  TensorField() = default;
  explicit TensorField(const GridPtr& g) {
    for (auto& row : c)
      for (auto& x : row) x = ScalarField(g);
  }
  ScalarField& operator()(int i, int j) { return c[i][j]; }
  const ScalarField& operator()(int i, int j) const { return c[i][j]; }
};

}  // namespace nsk
