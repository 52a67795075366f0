#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <cmath>
#include <complex>
#include <span>
#include <vector>

#include "nlsr/errors.hpp"
#include "nlsr/grid.hpp"

namespace nlsr {

/// Tridiagonal operator on node arrays: (A u)_i = lower_i u_{i-1} + diag_i u_i + upper_i u_{i+1}.
/// Operators built from the grid Laplacian are symmetric in the weighted
/// inner product, i.e. w_i upper_i = w_{i+1} lower_{i+1}.
struct TriDiag {
  std::vector<double> lower;
  std::vector<double> diag;
  std::vector<double> upper;

  std::size_t size() const { return diag.size(); }

  template <class T>
  void apply(std::span<const T> u, std::span<T> out) const {
    const std::size_t n = diag.size();
    for (std::size_t i = 0; i < n; ++i) {
      T s = diag[i] * u[i];
      if (i > 0) s += lower[i] * u[i - 1];
      if (i + 1 < n) s += upper[i] * u[i + 1];
      out[i] = s;
    }
  }

  template <class T>
  std::vector<T> operator()(std::span<const T> u) const {
    std::vector<T> out(u.size());
    apply<T>(u, out);
    return out;
  }
  std::vector<double> operator()(const std::vector<double>& u) const {
    return (*this)(std::span<const double>(u));
  }

  /// Off-diagonal of the similar symmetric matrix W^{1/2} A W^{-1/2}.
  std::vector<double> symmetric_offdiag() const {
    std::vector<double> s(diag.size() > 0 ? diag.size() - 1 : 0);
    for (std::size_t i = 0; i + 1 < diag.size(); ++i) s[i] = std::sqrt(upper[i] * lower[i + 1]);
    return s;
  }

  /// Number of eigenvalues strictly below x (Sturm count via LDL^T inertia).
  std::size_t count_below(double x) const {
    const auto s = symmetric_offdiag();
    std::size_t count = 0;
    double q = diag[0] - x;
    if (q < 0.0) ++count;
    for (std::size_t i = 1; i < diag.size(); ++i) {
      const double prev = (q == 0.0) ? 1e-300 : q;
      q = diag[i] - x - s[i - 1] * s[i - 1] / prev;
      if (q < 0.0) ++count;
    }
    return count;
  }

  /// Gershgorin enclosure [lo, hi] of the spectrum.
  std::pair<double, double> gershgorin() const {
    const auto s = symmetric_offdiag();
    double lo = 1e300, hi = -1e300;
    for (std::size_t i = 0; i < diag.size(); ++i) {
      double rad = 0.0;
      if (i > 0) rad += std::abs(s[i - 1]);
      if (i + 1 < diag.size()) rad += std::abs(s[i]);
      lo = std::min(lo, diag[i] - rad);
      hi = std::max(hi, diag[i] + rad);
    }
    return {lo, hi};
  }

  /// k-th smallest eigenvalue (k = 0 is the lowest) by bisection on Sturm counts.
  double eigenvalue(std::size_t k, double rel_tol = 1e-14) const {
    auto [lo, hi] = gershgorin();
    const double scale = std::max(std::abs(lo), std::abs(hi));
    for (int it = 0; it < 200 && hi - lo > rel_tol * scale; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (count_below(mid) > k) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  /// Distance from 0 to the nearest eigenvalue.
  double smallest_abs_eigenvalue() const {
    const std::size_t neg = count_below(0.0);
    double best = 1e300;
    if (neg > 0) best = std::abs(eigenvalue(neg - 1));
    if (neg < diag.size()) best = std::min(best, std::abs(eigenvalue(neg)));
    return best;
  }

  Eigen::SparseMatrix<double> to_sparse() const {
    const std::size_t n = diag.size();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(3 * n);
    for (std::size_t i = 0; i < n; ++i) {
      t.emplace_back(i, i, diag[i]);
      if (i > 0) t.emplace_back(i, i - 1, lower[i]);
      if (i + 1 < n) t.emplace_back(i, i + 1, upper[i]);
    }
    Eigen::SparseMatrix<double> m(n, n);
    m.setFromTriplets(t.begin(), t.end());
    return m;
  }
};

/// The grid Laplacian D as a tridiagonal operator.
inline TriDiag laplacian_matrix(const RadialGrid& g) {
  const std::size_t n = g.size();
  const auto a = g.faces();
  const auto w = g.weights();
  TriDiag m;
  m.lower.assign(n, 0.0);
  m.diag.assign(n, 0.0);
  m.upper.assign(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double dsum = 0.0;
    if (i + 1 < n) {
      m.upper[i] = a[i] / w[i];
      dsum += a[i];
    } else {
      dsum += 2.0 * a[i];  // Dirichlet ghost u_n = -u_{n-1}
    }
    if (i > 0) {
      m.lower[i] = a[i - 1] / w[i];
      dsum += a[i - 1];
    }
    m.diag[i] = -dsum / w[i];
  }
  return m;
}

/// Schrodinger-type operator shift - D - diag(potential).
inline TriDiag schrodinger_matrix(const RadialGrid& g, double shift, std::span<const double> potential) {
  TriDiag m = laplacian_matrix(g);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m.lower[i] = -m.lower[i];
    m.upper[i] = -m.upper[i];
    m.diag[i] = shift - m.diag[i] - potential[i];
  }
  return m;
}

/// Sparse LU wrapper that reports factorization failures as library errors.
class SparseSolver {
 public:
  explicit SparseSolver(const Eigen::SparseMatrix<double>& m) {
    lu_.analyzePattern(m);
    lu_.factorize(m);
    if (lu_.info() != Eigen::Success) {
      throw Error(ErrorKind::IllConditioned, "sparse factorization failed");
    }
  }

  std::vector<double> solve(std::span<const double> rhs) const {
    Eigen::Map<const Eigen::VectorXd> b(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
    Eigen::VectorXd x = lu_.solve(b);
    if (lu_.info() != Eigen::Success) throw Error(ErrorKind::IllConditioned, "sparse solve failed");
    return {x.data(), x.data() + x.size()};
  }

 private:
  mutable Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
};

/// Pre-factored complex tridiagonal system (no pivoting; the Crank-Nicolson
/// matrices it serves are diagonally dominant in the weighted sense).
class ComplexTriSolver {
 public:
  ComplexTriSolver() = default;
  ComplexTriSolver(std::vector<Complex> lower, std::vector<Complex> diag, std::vector<Complex> upper)
      : lower_(std::move(lower)), upper_(std::move(upper)) {
    const std::size_t n = diag.size();
    inv_pivot_.resize(n);
    cprime_.resize(n);
    Complex piv = diag[0];
    inv_pivot_[0] = 1.0 / piv;
    cprime_[0] = n > 1 ? upper_[0] * inv_pivot_[0] : Complex{};
    for (std::size_t i = 1; i < n; ++i) {
      piv = diag[i] - lower_[i] * cprime_[i - 1];
      inv_pivot_[i] = 1.0 / piv;
      cprime_[i] = i + 1 < n ? upper_[i] * inv_pivot_[i] : Complex{};
    }
  }

  void solve_in_place(std::span<Complex> x) const {
    const std::size_t n = inv_pivot_.size();
    x[0] *= inv_pivot_[0];
    for (std::size_t i = 1; i < n; ++i) x[i] = (x[i] - lower_[i] * x[i - 1]) * inv_pivot_[i];
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= cprime_[i] * x[i + 1];
  }

 private:
  std::vector<Complex> lower_;
  std::vector<Complex> upper_;
  std::vector<Complex> inv_pivot_;
  std::vector<Complex> cprime_;
};

}  // namespace nlsr
