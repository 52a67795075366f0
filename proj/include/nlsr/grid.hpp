#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "nlsr/errors.hpp"

namespace nlsr {

using Complex = std::complex<double>;

/// Cell-centered radial discretization of R^d on the ball of radius r_max.
///
/// Nodes sit at r_i = (i + 1/2) h with h = r_max / n, so the coordinate
/// singularity at the origin is never sampled. Quadrature weights are the
/// midpoint rule for the radial measure, w_i = |S^{d-1}| r_i^{d-1} h.
///
/// The Laplacian is written in flux form
///   (D u)_i = [a_{i+1/2}(u_{i+1} - u_i) - a_{i-1/2}(u_i - u_{i-1})] / w_i,
/// which is symmetric in the weighted inner product. The face conductances
/// are a_{i+1/2} = d * (w_0 + ... + w_i) / (h r_{i+1/2}); this choice makes D
/// exact on constants and on r^2 all the way down to the first cell, where the
/// naive r_{i+1/2}^{d-1} conductance is off by a factor 2^{d-1}/d. The inner
/// face a_{-1/2} is zero (reflection, u'(0) = 0) and the outer face carries a
/// homogeneous Dirichlet condition at r_max through the ghost u_n = -u_{n-1}.
class RadialGrid {
 public:
  RadialGrid(int dimension, std::size_t nodes, double r_max)
      : d_(dimension), n_(nodes), r_max_(r_max) {
    if (dimension < 3) throw Error(ErrorKind::Domain, "grid dimension must be >= 3");
    if (nodes < 4) throw Error(ErrorKind::Domain, "grid needs at least 4 nodes");
    if (!(r_max > 0.0) || !std::isfinite(r_max)) {
      throw Error(ErrorKind::Domain, "grid radius must be positive and finite");
    }
    h_ = r_max_ / static_cast<double>(n_);
    sphere_area_ = 2.0 * std::pow(std::numbers::pi, d_ / 2.0) / std::tgamma(d_ / 2.0);
    r_.resize(n_);
    w_.resize(n_);
    face_.resize(n_);
    double cumulative = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      r_[i] = (static_cast<double>(i) + 0.5) * h_;
      w_[i] = sphere_area_ * std::pow(r_[i], d_ - 1) * h_;
      cumulative += w_[i];
      const double r_face = (static_cast<double>(i) + 1.0) * h_;
      face_[i] = d_ * cumulative / (h_ * r_face);
    }
  }

  int dimension() const { return d_; }
  std::size_t size() const { return n_; }
  double r_max() const { return r_max_; }
  double spacing() const { return h_; }
  /// |S^{d-1}| = 2 pi^{d/2} / Gamma(d/2).
  double sphere_area() const { return sphere_area_; }

  std::span<const double> nodes() const { return r_; }
  std::span<const double> weights() const { return w_; }
  /// Conductance a_{i+1/2} of the face between node i and i+1; the last entry
  /// belongs to the Dirichlet face at r_max.
  std::span<const double> faces() const { return face_; }

  double r(std::size_t i) const { return r_[i]; }
  double w(std::size_t i) const { return w_[i]; }

  /// Volume of the ball of radius r_max.
  double ball_volume() const { return sphere_area_ * std::pow(r_max_, d_) / d_; }

  bool same_as(const RadialGrid& other) const {
    return this == &other || (d_ == other.d_ && n_ == other.n_ && r_max_ == other.r_max_);
  }

 private:
  int d_;
  std::size_t n_;
  double r_max_;
  double h_ = 0.0;
  double sphere_area_ = 0.0;
  std::vector<double> r_;
  std::vector<double> w_;
  std::vector<double> face_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(int dimension, std::size_t nodes, double r_max) {
  return std::make_shared<const RadialGrid>(dimension, nodes, r_max);
}

/// Complex radial profile sampled on a grid. A field built from real data
/// keeps a "real" flag; arithmetic that can only produce real values
/// preserves it and its imaginary parts are exactly zero.
class RadialField {
 public:
  RadialField() = default;
  explicit RadialField(GridPtr grid) : grid_(std::move(grid)), values_(grid_->size()), real_(true) {}

  static RadialField from_real(GridPtr grid, std::span<const double> values) {
    RadialField f(std::move(grid));
    check_size(*f.grid_, values.size());
    for (std::size_t i = 0; i < values.size(); ++i) f.values_[i] = Complex(values[i], 0.0);
    return f;
  }

  static RadialField from_complex(GridPtr grid, std::vector<Complex> values) {
    check_size(*grid, values.size());
    RadialField f;
    f.grid_ = std::move(grid);
    f.values_ = std::move(values);
    f.real_ = std::all_of(f.values_.begin(), f.values_.end(),
                          [](const Complex& z) { return z.imag() == 0.0; });
    return f;
  }

  template <class F>
  static RadialField from_function(GridPtr grid, F&& fn) {
    std::vector<double> v(grid->size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid->r(i));
    return from_real(grid, v);
  }

  const RadialGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }
  bool is_real() const { return real_; }

  std::span<const Complex> values() const { return values_; }
  const Complex& operator[](std::size_t i) const { return values_[i]; }

  std::vector<double> real_part() const {
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i].real();
    return out;
  }
  std::vector<double> imag_part() const {
    std::vector<double> out(values_.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = values_[i].imag();
    return out;
  }

  RadialField conj() const {
    RadialField out = *this;
    for (auto& z : out.values_) z = std::conj(z);
    return out;
  }

  RadialField& operator+=(const RadialField& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    real_ = real_ && o.real_;
    return *this;
  }
  RadialField& operator-=(const RadialField& o) {
    check_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    real_ = real_ && o.real_;
    return *this;
  }
  RadialField& operator*=(double s) {
    for (auto& z : values_) z *= s;
    return *this;
  }
  RadialField& operator*=(Complex s) {
    for (auto& z : values_) z *= s;
    real_ = real_ && s.imag() == 0.0;
    if (!real_ && s.imag() != 0.0) {
      // Multiplying by a complex scalar may still produce exact zeros.
      real_ = std::all_of(values_.begin(), values_.end(),
                          [](const Complex& z) { return z.imag() == 0.0; });
    }
    return *this;
  }

  friend RadialField operator+(RadialField a, const RadialField& b) { return a += b; }
  friend RadialField operator-(RadialField a, const RadialField& b) { return a -= b; }
  friend RadialField operator*(double s, RadialField a) { return a *= s; }
  friend RadialField operator*(Complex s, RadialField a) { return a *= s; }

  void check_same(const RadialField& o) const {
    if (!grid_ || !o.grid_ || !grid_->same_as(*o.grid_)) {
      throw Error(ErrorKind::GridMismatch, "fields live on different grids");
    }
  }

 private:
  static void check_size(const RadialGrid& g, std::size_t n) {
    if (n != g.size()) {
      throw Error(ErrorKind::GridMismatch, "value count " + std::to_string(n) +
                                               " does not match grid size " +
                                               std::to_string(g.size()));
    }
  }

  GridPtr grid_;
  std::vector<Complex> values_;
  bool real_ = true;
};

// ---------------------------------------------------------------------------
// Kernels on raw node arrays. Templated on the scalar so the same code serves
// real profiles (ground state, modes) and complex states (evolution).

template <class T>
void apply_laplacian(const RadialGrid& g, std::span<const T> u, std::span<T> out) {
  const std::size_t n = g.size();
  const auto a = g.faces();
  const auto w = g.weights();
  for (std::size_t i = 0; i < n; ++i) {
    const T right = (i + 1 < n) ? u[i + 1] : -u[i];
    T flux = a[i] * (right - u[i]);
    if (i > 0) flux -= a[i - 1] * (u[i] - u[i - 1]);
    out[i] = flux / w[i];
  }
}

template <class T>
std::vector<T> laplacian(const RadialGrid& g, std::span<const T> u) {
  std::vector<T> out(u.size());
  apply_laplacian<T>(g, u, out);
  return out;
}

/// Discrete Dirichlet energy sum a_{i+1/2}|u_{i+1}-u_i|^2 (+ Dirichlet face),
/// equal to -(D u, u) so that the identities of stationary solutions hold on
/// the grid exactly as they do in the continuum.
template <class T>
double grad_norm_sq(const RadialGrid& g, std::span<const T> u) {
  const std::size_t n = g.size();
  const auto a = g.faces();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) s += a[i] * std::norm(u[i + 1] - u[i]);
  s += a[n - 1] * 2.0 * std::norm(u[n - 1]);
  return s;
}

/// Interior-face energy without the Dirichlet face: the whole-space gradient
/// norm of a field with a slowly decaying tail, truncated at r_max.
template <class T>
double grad_norm_sq_interior(const RadialGrid& g, std::span<const T> u) {
  const auto a = g.faces();
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < g.size(); ++i) s += a[i] * std::norm(u[i + 1] - u[i]);
  return s;
}

/// Re of the gradient pairing (grad u, grad v) consistent with grad_norm_sq.
template <class T>
T grad_inner(const RadialGrid& g, std::span<const T> u, std::span<const T> v) {
  const std::size_t n = g.size();
  const auto a = g.faces();
  T s{};
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if constexpr (std::is_same_v<T, Complex>) {
      s += a[i] * (u[i + 1] - u[i]) * std::conj(v[i + 1] - v[i]);
    } else {
      s += a[i] * (u[i + 1] - u[i]) * (v[i + 1] - v[i]);
    }
  }
  if constexpr (std::is_same_v<T, Complex>) {
    s += a[n - 1] * 2.0 * u[n - 1] * std::conj(v[n - 1]);
  } else {
    s += a[n - 1] * 2.0 * u[n - 1] * v[n - 1];
  }
  return s;
}

inline double dot(const RadialGrid& g, std::span<const double> u, std::span<const double> v) {
  double s = 0.0;
  const auto w = g.weights();
  for (std::size_t i = 0; i < u.size(); ++i) s += w[i] * u[i] * v[i];
  return s;
}

inline double lq_power(const RadialGrid& g, std::span<const double> u, double q) {
  double s = 0.0;
  const auto w = g.weights();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]);
    if (a > 0.0) s += w[i] * std::exp(q * std::log(a));
  }
  return s;
}

inline double lq_power(const RadialGrid& g, std::span<const Complex> u, double q) {
  double s = 0.0;
  const auto w = g.weights();
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]);
    if (a > 0.0) s += w[i] * std::exp(q * std::log(a));
  }
  return s;
}

/// |x|^q with |x| = 0 mapped to an exact zero.
inline double pow_abs(double x, double q) {
  const double a = std::abs(x);
  return a > 0.0 ? std::exp(q * std::log(a)) : 0.0;
}

// ---------------------------------------------------------------------------
// Field-level operations.

inline RadialField laplacian_radial(const RadialField& f) {
  auto out = laplacian<Complex>(f.grid(), f.values());
  RadialField res = RadialField::from_complex(f.grid_ptr(), std::move(out));
  return res;
}

/// sum_i w_i f_i conj(g_i).
inline Complex inner(const RadialField& f, const RadialField& g) {
  f.check_same(g);
  Complex s{};
  const auto w = f.grid().weights();
  for (std::size_t i = 0; i < f.size(); ++i) s += w[i] * f[i] * std::conj(g[i]);
  return s;
}

inline double inner_real(const RadialField& f, const RadialField& g) { return inner(f, g).real(); }

/// Symplectic form Omega(f, g) = Im int f conj(g).
inline double omega_form(const RadialField& f, const RadialField& g) { return inner(f, g).imag(); }

inline double norm_Lq(const RadialField& f, double q) {
  if (!(q >= 1.0)) throw Error(ErrorKind::Domain, "norm_Lq requires q >= 1");
  const double s = lq_power(f.grid(), f.values(), q);
  return s > 0.0 ? std::pow(s, 1.0 / q) : 0.0;
}

inline double norm_L2(const RadialField& f) { return norm_Lq(f, 2.0); }

inline double grad_norm(const RadialField& f) {
  return std::sqrt(grad_norm_sq<Complex>(f.grid(), f.values()));
}

inline double norm_H1(const RadialField& f) {
  const double l2 = lq_power(f.grid(), f.values(), 2.0);
  return std::sqrt(l2 + grad_norm_sq<Complex>(f.grid(), f.values()));
}

/// Complex H^1 inner product (f, g)_{L^2} + (grad f, grad g).
inline Complex inner_H1(const RadialField& f, const RadialField& g) {
  f.check_same(g);
  return inner(f, g) + grad_inner<Complex>(f.grid(), f.values(), g.values());
}

namespace detail {

/// Node value with even reflection through the origin and the odd Dirichlet
/// ghost past r_max; indices beyond the ghost layer read as zero.
inline Complex extended_value(std::span<const Complex> u, long j) {
  const long n = static_cast<long>(u.size());
  if (j < 0) j = -j - 1;
  if (j < n) return u[static_cast<std::size_t>(j)];
  const long mirror = 2 * n - 1 - j;
  if (mirror >= 0 && mirror < n) return -u[static_cast<std::size_t>(mirror)];
  return Complex{};
}

}  // namespace detail

/// Cubic (4-point Lagrange) interpolation of a field at radius r. Radii past
/// r_max read as zero.
inline Complex interpolate(const RadialField& f, double r) {
  const RadialGrid& g = f.grid();
  if (r >= g.r_max()) return Complex{};
  r = std::abs(r);
  const double x = r / g.spacing() - 0.5;  // fractional node index
  const long j = static_cast<long>(std::floor(x));
  const double t = x - static_cast<double>(j);
  const auto u = f.values();
  const Complex p0 = detail::extended_value(u, j - 1);
  const Complex p1 = detail::extended_value(u, j);
  const Complex p2 = detail::extended_value(u, j + 1);
  const Complex p3 = detail::extended_value(u, j + 2);
  const double c0 = -t * (t - 1.0) * (t - 2.0) / 6.0;
  const double c1 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
  const double c2 = -(t + 1.0) * t * (t - 2.0) / 2.0;
  const double c3 = (t + 1.0) * t * (t - 1.0) / 6.0;
  return c0 * p0 + c1 * p1 + c2 * p2 + c3 * p3;
}

/// Scaling operator T_omega f(x) = omega^{-1/(p-1)} f(x / sqrt(omega)),
/// sampled on `target` (defaults to the source grid).
inline RadialField scale_T_omega(const RadialField& f, double omega, double p,
                                 GridPtr target = nullptr) {
  if (!(omega > 0.0)) throw Error(ErrorKind::Domain, "scale_T_omega requires omega > 0");
  if (!target) target = f.grid_ptr();
  if (target->dimension() != f.grid().dimension()) {
    throw Error(ErrorKind::GridMismatch, "scaling between grids of different dimension");
  }
  const double amp = std::pow(omega, -1.0 / (p - 1.0));
  const double stretch = 1.0 / std::sqrt(omega);
  std::vector<Complex> out(target->size());
  if (omega == 1.0 && target->same_as(f.grid())) {
    out.assign(f.values().begin(), f.values().end());
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = amp * interpolate(f, target->r(i) * stretch);
  }
  auto res = RadialField::from_complex(std::move(target), std::move(out));
  return res;
}

}  // namespace nlsr
