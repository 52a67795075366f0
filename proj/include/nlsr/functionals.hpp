#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "nlsr/grid.hpp"
#include "nlsr/params.hpp"

namespace nlsr {

/// The three integrals every functional is built from.
struct NormParts {
  double l2_sq = 0.0;      ///< ||u||_2^2
  double grad_sq = 0.0;    ///< ||grad u||_2^2
  double lp1 = 0.0;        ///< ||u||_{p+1}^{p+1}
  double crit = 0.0;       ///< ||u||_{2^*}^{2^*}
};

inline NormParts norm_parts(const RadialField& u, const ModelParams& mp) {
  NormParts n;
  n.l2_sq = lq_power(u.grid(), u.values(), 2.0);
  n.grad_sq = grad_norm_sq<Complex>(u.grid(), u.values());
  n.lp1 = lq_power(u.grid(), u.values(), mp.p + 1.0);
  n.crit = lq_power(u.grid(), u.values(), mp.critical_exponent());
  return n;
}

inline double mass(const RadialField& u) { return 0.5 * lq_power(u.grid(), u.values(), 2.0); }

inline double hamiltonian(const NormParts& n, const ModelParams& mp) {
  return 0.5 * n.grad_sq - n.lp1 / (mp.p + 1.0) - n.crit / mp.critical_exponent();
}
inline double hamiltonian(const RadialField& u, const ModelParams& mp) {
  return hamiltonian(norm_parts(u, mp), mp);
}

/// Virial functional K(u) = ||grad u||^2 - d(p-1)/(2(p+1)) ||u||_{p+1}^{p+1} - ||u||_{2^*}^{2^*}.
inline double K_functional(const NormParts& n, const ModelParams& mp) {
  return n.grad_sq - mp.d * (mp.p - 1.0) / (2.0 * (mp.p + 1.0)) * n.lp1 - n.crit;
}
inline double K_functional(const RadialField& u, const ModelParams& mp) {
  return K_functional(norm_parts(u, mp), mp);
}

/// Action S_omega = omega M + H.
inline double S_omega(const NormParts& n, const ModelParams& mp) {
  return 0.5 * mp.omega * n.l2_sq + hamiltonian(n, mp);
}
inline double S_omega(const RadialField& u, const ModelParams& mp) { return S_omega(norm_parts(u, mp), mp); }

inline double I_omega(const RadialField& u, const ModelParams& mp) {
  const auto n = norm_parts(u, mp);
  return S_omega(n, mp) - 2.0 / (mp.d * (mp.p - 1.0)) * K_functional(n, mp);
}

inline double J_omega(const RadialField& u, const ModelParams& mp) {
  const auto n = norm_parts(u, mp);
  return S_omega(n, mp) - 0.5 * K_functional(n, mp);
}

/// Nehari functional omega||u||^2 + ||grad u||^2 - ||u||_{p+1}^{p+1} - ||u||_{2^*}^{2^*}.
inline double N_omega(const RadialField& u, const ModelParams& mp) {
  const auto n = norm_parts(u, mp);
  return mp.omega * n.l2_sq + n.grad_sq - n.lp1 - n.crit;
}

/// Functionals of the purely subcritical problem (no energy-critical term).
struct DaggerValues {
  double H = 0.0;
  double K = 0.0;
  double S = 0.0;
};

inline DaggerValues dagger_functionals(const RadialField& u, const ModelParams& mp) {
  const auto n = norm_parts(u, mp);
  DaggerValues v;
  v.H = 0.5 * n.grad_sq - n.lp1 / (mp.p + 1.0);
  v.K = n.grad_sq - mp.d * (mp.p - 1.0) / (2.0 * (mp.p + 1.0)) * n.lp1;
  v.S = 0.5 * mp.omega * n.l2_sq + v.H;
  return v;
}

/// Functionals of the purely energy-critical problem.
struct DdaggerValues {
  double H = 0.0;
  double K = 0.0;
  double I = 0.0;
};

inline DdaggerValues ddagger_functionals(const RadialField& u, const ModelParams& mp) {
  const double grad_sq = grad_norm_sq<Complex>(u.grid(), u.values());
  const double crit = lq_power(u.grid(), u.values(), mp.critical_exponent());
  DdaggerValues v;
  v.H = 0.5 * grad_sq - crit / mp.critical_exponent();
  v.K = grad_sq - crit;
  v.I = 0.5 * grad_sq;
  return v;
}

/// Variance integral sum w_i r_i^2 |u_i|^2.
inline double second_moment(const RadialField& u) {
  const auto& g = u.grid();
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += g.w(i) * g.r(i) * g.r(i) * std::norm(u[i]);
  return s;
}

/// Pointwise nonlinear potential |u|^{p-1} + |u|^{4/(d-2)}.
inline double nonlinear_potential(double amplitude, const ModelParams& mp) {
  return pow_abs(amplitude, mp.p - 1.0) + pow_abs(amplitude, mp.critical_power());
}

/// Stationary residual omega u - Lap u - |u|^{p-1} u - |u|^{4/(d-2)} u, the
/// L^2 gradient of S_omega.
inline RadialField first_variation_S(const RadialField& u, const ModelParams& mp) {
  auto lap = laplacian<Complex>(u.grid(), u.values());
  std::vector<Complex> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = std::abs(u[i]);
    out[i] = mp.omega * u[i] - lap[i] - nonlinear_potential(a, mp) * u[i];
  }
  auto res = RadialField::from_complex(u.grid_ptr(), std::move(out));
  return res;
}

/// L^2 dilation u_lambda(r) = lambda^{d/2} u(lambda r), interpolated on the same grid.
inline RadialField dilate(const RadialField& u, double lambda) {
  const auto& g = u.grid();
  std::vector<Complex> out(u.size());
  const double amp = std::pow(lambda, g.dimension() / 2.0);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = amp * interpolate(u, lambda * g.r(i));
  return RadialField::from_complex(u.grid_ptr(), std::move(out));
}

}  // namespace nlsr
