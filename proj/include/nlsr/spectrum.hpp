#pragma once

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "nlsr/errors.hpp"
#include "nlsr/functionals.hpp"
#include "nlsr/groundstate.hpp"
#include "nlsr/linalg.hpp"

namespace nlsr {

/// L_{omega,+} and L_{omega,-} at a ground state, with a factorized solver
/// for L_- on the complement of its kernel span{Phi}.
class LinearizedOperators {
 public:
  explicit LinearizedOperators(const GroundState& gs)
      : grid_(gs.grid_ptr()),
        phi_(gs.profile.real_part()),
        L_plus_(assemble_L_plus(gs)),
        L_minus_(assemble_L_minus(gs)) {
    build_bordered_solver();
  }

  const RadialGrid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  const TriDiag& L_plus() const { return L_plus_; }
  const TriDiag& L_minus() const { return L_minus_; }
  const std::vector<double>& phi() const { return phi_; }

  std::vector<double> apply_plus(const std::vector<double>& u) const { return L_plus_(u); }
  std::vector<double> apply_minus(const std::vector<double>& u) const { return L_minus_(u); }

  /// <L u, u> in the quadrature inner product.
  double form_plus(const std::vector<double>& u) const { return dot(*grid_, L_plus_(u), u); }
  double form_minus(const std::vector<double>& u) const { return dot(*grid_, L_minus_(u), u); }

  /// x with L_- x = b - s Phi and (x, Phi) = 0. For b orthogonal to Phi this is
  /// the inverse of L_- on the kernel complement.
  std::vector<double> solve_minus_deflated(const std::vector<double>& b) const {
    const std::size_t n = phi_.size();
    std::vector<double> rhs(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) rhs[i] = b[i];
    auto x = bordered_->solve(rhs);
    x.resize(n);
    return x;
  }

 private:
  void build_bordered_solver() {
    const std::size_t n = phi_.size();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(5 * n + 2);
    for (std::size_t i = 0; i < n; ++i) {
      t.emplace_back(i, i, L_minus_.diag[i]);
      if (i > 0) t.emplace_back(i, i - 1, L_minus_.lower[i]);
      if (i + 1 < n) t.emplace_back(i, i + 1, L_minus_.upper[i]);
      t.emplace_back(i, n, phi_[i]);
      t.emplace_back(n, i, grid_->w(i) * phi_[i]);
    }
    Eigen::SparseMatrix<double> m(n + 1, n + 1);
    m.setFromTriplets(t.begin(), t.end());
    bordered_ = std::make_shared<SparseSolver>(m);
  }

  GridPtr grid_;
  std::vector<double> phi_;
  TriDiag L_plus_;
  TriDiag L_minus_;
  std::shared_ptr<SparseSolver> bordered_;
};

inline LinearizedOperators assemble_operators(const GroundState& gs) { return LinearizedOperators(gs); }

/// Unstable eigenvalue and real mode profiles of the linearized flow:
/// L_+ f1 = -mu f2, L_- f2 = mu f1, 2 (f1, f2) = 1, (Phi, f2) < 0.
struct SpectralData {
  double nu = 0.0;          ///< constrained Rayleigh minimum, nu = -mu^2
  double mu = 0.0;
  RadialField f1;
  RadialField f2;
  RadialField minimizer;    ///< normalized minimizer u of the Rayleigh problem
  int iterations = 0;

  // Certificate values, all relative.
  double residual_plus = 0.0;   ///< ||L_+ f1 + mu f2|| / (mu ||f2||)
  double residual_minus = 0.0;  ///< ||L_- f2 - mu f1|| / (mu ||f1||)
  double normalization = 0.0;   ///< 2 (f1, f2)
  double orth_phi_f1 = 0.0;     ///< |(Phi, f1)| / (||Phi|| ||f1||)
  double orth_phiprime_f2 = 0.0;
  double phi_f2 = 0.0;          ///< (Phi, f2), negative by convention
  double f1_f2 = 0.0;

  /// U_+ = f1 + i f2.
  RadialField U_plus() const {
    std::vector<Complex> v(f1.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = Complex(f1[i].real(), f2[i].real());
    return RadialField::from_complex(f1.grid_ptr(), std::move(v));
  }
  /// U_- = f1 - i f2.
  RadialField U_minus() const { return U_plus().conj(); }
};

/// Rayleigh quotient <L_+ u, u> / <L_-^{-1} u, u> over u orthogonal to Phi;
/// u is projected onto the constraint first.
inline double rayleigh_quotient(const LinearizedOperators& ops, std::vector<double> u) {
  const auto& g = ops.grid();
  const auto& phi = ops.phi();
  const double c = dot(g, u, phi) / dot(g, phi, phi);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] -= c * phi[i];
  const auto y = ops.solve_minus_deflated(u);
  return ops.form_plus(u) / dot(g, y, u);
}

namespace detail {

/// Solver for (L_- L_+ - sigma) x = b through the first-order block system
///   -sigma x + L_- z = b,  L_+ x - z = 0,
/// which keeps matrix entries at the O(h^-2) scale instead of squaring them.
class ShiftedProductSolver {
 public:
  ShiftedProductSolver(const LinearizedOperators& ops, double sigma) : n_(ops.phi().size()) {
    const auto& lp = ops.L_plus();
    const auto& lm = ops.L_minus();
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(8 * n_);
    // Interleaved unknowns (x_i, z_i) keep the matrix banded.
    for (std::size_t i = 0; i < n_; ++i) {
      const auto xi = static_cast<int>(2 * i), zi = static_cast<int>(2 * i + 1);
      t.emplace_back(xi, xi, -sigma);
      t.emplace_back(xi, zi, lm.diag[i]);
      if (i > 0) t.emplace_back(xi, zi - 2, lm.lower[i]);
      if (i + 1 < n_) t.emplace_back(xi, zi + 2, lm.upper[i]);
      t.emplace_back(zi, xi, lp.diag[i]);
      if (i > 0) t.emplace_back(zi, xi - 2, lp.lower[i]);
      if (i + 1 < n_) t.emplace_back(zi, xi + 2, lp.upper[i]);
      t.emplace_back(zi, zi, -1.0);
    }
    Eigen::SparseMatrix<double> m(2 * n_, 2 * n_);
    m.setFromTriplets(t.begin(), t.end());
    solver_ = std::make_unique<SparseSolver>(m);
  }

  std::vector<double> solve(const std::vector<double>& b) const {
    std::vector<double> rhs(2 * n_, 0.0);
    for (std::size_t i = 0; i < n_; ++i) rhs[2 * i] = b[i];
    auto xz = solver_->solve(rhs);
    std::vector<double> x(n_);
    for (std::size_t i = 0; i < n_; ++i) x[i] = xz[2 * i];
    return x;
  }

 private:
  std::size_t n_;
  std::unique_ptr<SparseSolver> solver_;
};

inline double wnorm(const RadialGrid& g, const std::vector<double>& u) { return std::sqrt(dot(g, u, u)); }

}  // namespace detail

struct SpectrumOptions {
  double tol = 1e-12;  ///< relative change of the eigenvalue estimate at convergence
  int max_iter = 200;
};

/// Unstable eigenvalue of -i L_omega.
///
/// nu is the lowest eigenvalue of the symmetric-definite pencil
/// L_+ u = nu L_-^{-1} u on the complement of Phi; every other eigenvalue is
/// positive. Shifted inverse iteration from a shift below the trial Rayleigh
/// value locks onto it, then Rayleigh-quotient iteration finishes.
inline SpectralData solve_mu(const LinearizedOperators& ops, const GroundState& gs,
                             const SpectrumOptions& opts = {}) {
  const auto& g = ops.grid();
  const auto& phi = ops.phi();
  const std::size_t n = phi.size();

  // Trial vector Phi^p: concentrated where L_+ is most negative.
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = pow_abs(phi[i], gs.params.p);
  double rq = rayleigh_quotient(ops, u);
  if (!(rq < 0.0)) {
    throw Error(ErrorKind::PositiveInfimum, "trial Rayleigh value is " + std::to_string(rq));
  }

  // One constrained inverse step: x = (A - sigma)^{-1}(u + c Phi), (x, Phi) = 0,
  // with A = L_- L_+.
  auto step = [&](const detail::ShiftedProductSolver& solver, const std::vector<double>& y_phi) {
    auto y = solver.solve(u);
    const double c = -dot(g, y, phi) / dot(g, y_phi, phi);
    for (std::size_t i = 0; i < n; ++i) u[i] = y[i] + c * y_phi[i];
    const double un = detail::wnorm(g, u);
    for (auto& x : u) x /= un;
    return rayleigh_quotient(ops, u);
  };

  int it = 0;
  {
    detail::ShiftedProductSolver solver(ops, 2.0 * rq);
    const auto y_phi = solver.solve(phi);
    for (; it < opts.max_iter; ++it) {
      const double next = step(solver, y_phi);
      const bool settled = std::abs(next - rq) <= 1e-6 * std::abs(next);
      rq = next;
      if (settled) break;
    }
  }
  for (; it < opts.max_iter; ++it) {
    detail::ShiftedProductSolver solver(ops, rq);
    const auto y_phi = solver.solve(phi);
    const double next = step(solver, y_phi);
    const bool settled = std::abs(next - rq) <= opts.tol * std::abs(next);
    rq = next;
    if (settled) break;
  }

  const double nu = rayleigh_quotient(ops, u);
  if (!(nu < 0.0)) {
    throw Error(ErrorKind::PositiveInfimum, "constrained Rayleigh minimum is " + std::to_string(nu));
  }
  SpectralData sd;
  sd.nu = nu;
  sd.mu = std::sqrt(-nu);
  sd.iterations = it;

  const auto& phip = gs.omega_derivative;
  if (phip.empty()) throw Error(ErrorKind::IllConditioned, "ground state carries no omega-derivative");
  const auto phi_prime = phip.real_part();

  // f1 = -u, f2 = -mu L_-^{-1} u + c Phi with c fixed by (Phi', f2) = 0, which
  // selects the preimage satisfying L_+ f1 = -mu f2.
  std::vector<double> f1(n), f2(n);
  const auto y = ops.solve_minus_deflated(u);
  for (std::size_t i = 0; i < n; ++i) {
    f1[i] = -u[i];
    f2[i] = -sd.mu * y[i];
  }
  {
    const double c = -dot(g, f2, phi_prime) / dot(g, phi, phi_prime);
    for (std::size_t i = 0; i < n; ++i) f2[i] += c * phi[i];
  }
  const double pair = dot(g, f1, f2);
  if (!(pair > 0.0)) throw Error(ErrorKind::IllConditioned, "mode pairing (f1, f2) is not positive");
  double scale = 1.0 / std::sqrt(2.0 * pair);
  if (dot(g, phi, f2) > 0.0) scale = -scale;
  for (std::size_t i = 0; i < n; ++i) {
    f1[i] *= scale;
    f2[i] *= scale;
  }

  const auto lpf1 = ops.apply_plus(f1);
  const auto lmf2 = ops.apply_minus(f2);
  std::vector<double> rp(n), rm(n);
  for (std::size_t i = 0; i < n; ++i) {
    rp[i] = lpf1[i] + sd.mu * f2[i];
    rm[i] = lmf2[i] - sd.mu * f1[i];
  }
  const double nf1 = detail::wnorm(g, f1), nf2 = detail::wnorm(g, f2);
  sd.residual_plus = detail::wnorm(g, rp) / (sd.mu * nf2);
  sd.residual_minus = detail::wnorm(g, rm) / (sd.mu * nf1);
  sd.f1_f2 = dot(g, f1, f2);
  sd.normalization = 2.0 * sd.f1_f2;
  sd.orth_phi_f1 = std::abs(dot(g, phi, f1)) / (detail::wnorm(g, phi) * nf1);
  sd.orth_phiprime_f2 = std::abs(dot(g, phi_prime, f2)) / (detail::wnorm(g, phi_prime) * nf2);
  sd.phi_f2 = dot(g, phi, f2);

  sd.f1 = RadialField::from_real(ops.grid_ptr(), f1);
  sd.f2 = RadialField::from_real(ops.grid_ptr(), f2);
  sd.minimizer = RadialField::from_real(ops.grid_ptr(), u);

  if (sd.residual_plus > 1e-4 || sd.residual_minus > 1e-4 || std::abs(sd.normalization - 1.0) > 1e-6 ||
      sd.orth_phi_f1 > 1e-6 || sd.orth_phiprime_f2 > 1e-6 || !(sd.phi_f2 < 0.0)) {
    throw Error(ErrorKind::IllConditioned,
                "mode certificate failed: res+ " + std::to_string(sd.residual_plus) + ", res- " +
                    std::to_string(sd.residual_minus) + ", orth " + std::to_string(sd.orth_phi_f1) + "/" +
                    std::to_string(sd.orth_phiprime_f2));
  }
  return sd;
}

/// mu |(Phi, f2)| / |(Phi^{2^*-1}, f1)|; +inf when the denominator degenerates.
inline double mode_overlap_ratio(const SpectralData& sd, const GroundState& gs) {
  const auto& g = gs.grid();
  const auto phi = gs.profile.real_part();
  const auto f1 = sd.f1.real_part();
  const auto f2 = sd.f2.real_part();
  const double q = gs.params.critical_exponent() - 1.0;
  std::vector<double> phi_q(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) phi_q[i] = pow_abs(phi[i], q);
  const double num = sd.mu * std::abs(dot(g, phi, f2));
  const double den = std::abs(dot(g, phi_q, f1));
  const double scale = std::sqrt(dot(g, phi_q, phi_q) * dot(g, f1, f1));
  if (den < 1e-12 * scale) return std::numeric_limits<double>::infinity();
  return num / den;
}

/// Spectral facts about L_+ and L_- used as certificates.
struct OperatorCensus {
  std::size_t L_plus_negative = 0;     ///< eigenvalues of radial L_+ below -tol
  std::size_t L_plus_near_zero = 0;    ///< eigenvalues in [-tol, tol]
  std::size_t L_minus_negative = 0;    ///< eigenvalues of L_- below -tol
  double L_minus_second = 0.0;         ///< smallest eigenvalue on the complement of Phi
  double L_minus_kernel_residual = 0.0;  ///< ||L_- Phi|| / ||Phi||_{H^1}
  double L_plus_identity_residual = 0.0;
  double tol = 0.0;
};

inline OperatorCensus operator_census(const LinearizedOperators& ops, const GroundState& gs) {
  OperatorCensus c;
  const auto& g = ops.grid();
  auto [lo, hi] = ops.L_plus().gershgorin();
  const double scale = std::max(gs.omega(), 1e-300);
  c.tol = 1e-6 * scale;
  c.L_plus_negative = ops.L_plus().count_below(-c.tol);
  c.L_plus_near_zero = ops.L_plus().count_below(c.tol) - c.L_plus_negative;
  c.L_minus_negative = ops.L_minus().count_below(-c.tol);
  c.L_minus_second = ops.L_minus().eigenvalue(1);
  (void)lo;
  (void)hi;
  const auto& phi = ops.phi();
  const auto lm = ops.apply_minus(phi);
  const double phi_h1 = norm_H1(gs.profile);
  c.L_minus_kernel_residual = detail::wnorm(g, lm) / phi_h1;
  auto lp = ops.apply_plus(phi);
  const double p = gs.params.p, q = gs.params.critical_exponent();
  for (std::size_t i = 0; i < phi.size(); ++i) {
    lp[i] += (p - 1.0) * pow_abs(phi[i], p) + (q - 2.0) * pow_abs(phi[i], q - 1.0);
  }
  c.L_plus_identity_residual = detail::wnorm(g, lp) / phi_h1;
  return c;
}

/// Rayleigh value of Pi U' = U' + (s_p/2) U for the subcritical linearization,
/// together with the relative overlap (U, Pi U') it was projected against.
struct ProjectedModeValue {
  double rayleigh = 0.0;
  double overlap = 0.0;
};

inline ProjectedModeValue pi_U_prime_rayleigh(const GroundState& u_state) {
  const LinearizedOperators ops(u_state);
  const auto& g = ops.grid();
  auto v = U_prime_limit(u_state).real_part();
  const auto& u = ops.phi();
  const double half_sp = 0.5 * u_state.params.s_p();
  for (std::size_t i = 0; i < v.size(); ++i) v[i] += half_sp * u[i];
  ProjectedModeValue out;
  out.overlap = std::abs(dot(g, v, u)) / (detail::wnorm(g, v) * detail::wnorm(g, u));
  out.rayleigh = rayleigh_quotient(ops, v);
  return out;
}

}  // namespace nlsr
