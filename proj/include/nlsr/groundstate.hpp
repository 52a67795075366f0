#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "nlsr/errors.hpp"
#include "nlsr/functionals.hpp"
#include "nlsr/grid.hpp"
#include "nlsr/linalg.hpp"
#include "nlsr/params.hpp"

namespace nlsr {

/// Which stationary problem a profile solves.
enum class StationaryProblem {
  Combined,     ///< omega u - Lap u - u^p - u^{2^*-1} = 0
  Subcritical,  ///< u - Lap u - u^p = 0 (omega fixed to 1, no critical term)
};

/// Positive radial ground state together with its omega-derivative and the
/// scalars the rest of the pipeline keys on.
struct GroundState {
  ModelParams params;
  StationaryProblem problem = StationaryProblem::Combined;
  RadialField profile;            ///< Phi_omega (real, positive, decreasing)
  RadialField omega_derivative;   ///< dPhi/domega; empty for the subcritical problem
  double central_value = 0.0;     ///< Phi_omega(r_0)
  double shooting_value = 0.0;    ///< u(0) found by bisection before the Newton polish
  double residual_H1 = 0.0;       ///< H^1 norm of the stationary residual
  double action = 0.0;            ///< m_omega = S_omega(Phi_omega)
  double mass_value = 0.0;        ///< M(Phi_omega)
  int newton_iterations = 0;

  const RadialGrid& grid() const { return profile.grid(); }
  const GridPtr& grid_ptr() const { return profile.grid_ptr(); }
  double omega() const { return params.omega; }
};

namespace detail {

struct StationaryModel {
  int d = 4;
  double omega = 1.0;
  double p = 2.5;
  double crit_coeff = 1.0;  // 0 drops the energy-critical term
  double crit_power = 2.0;  // 4/(d-2)

  double source(double u) const {
    return omega * u - pow_abs(u, p - 1.0) * u - crit_coeff * pow_abs(u, crit_power) * u;
  }
  /// Derivative of the nonlinear part u^p + c u^{q}.
  double nonlinear_slope(double u) const {
    return p * pow_abs(u, p - 1.0) + crit_coeff * (crit_power + 1.0) * pow_abs(u, crit_power);
  }
};

inline StationaryModel make_model(const ModelParams& mp, StationaryProblem problem) {
  StationaryModel m;
  m.d = mp.d;
  m.p = mp.p;
  m.crit_power = mp.critical_power();
  if (problem == StationaryProblem::Combined) {
    m.omega = mp.omega;
    m.crit_coeff = 1.0;
  } else {
    m.omega = 1.0;
    m.crit_coeff = 0.0;
  }
  return m;
}

enum class ShotOutcome { Overshoot, Undershoot, Reached };

struct Shot {
  ShotOutcome outcome = ShotOutcome::Reached;
  std::vector<double> values;  // node values up to the stopping node
  std::size_t stop = 0;        // first node past the turning point / zero
};

/// Integrates u'' = -(d-1)/r u' + source(u) from u(0) = a, u'(0) = 0 with RK4
/// (two substeps per cell) and samples the nodes of `g`. Stops at the first
/// sign change (overshoot) or the first upturn u' > 0 (undershoot).
inline Shot shoot(const RadialGrid& g, const StationaryModel& m, double a) {
  const std::size_t n = g.size();
  const double h = g.spacing();
  Shot shot;
  shot.values.reserve(n);
  auto rhs = [&](double r, double u, double v, double& du, double& dv) {
    du = v;
    dv = -(m.d - 1) / r * v + m.source(u);
  };
  // Taylor start at the first node: u = a + c r^2, u' = 2 c r with c = source(a)/(2d).
  const double c = m.source(a) / (2.0 * m.d);
  double r = g.r(0);
  double u = a + c * r * r;
  double v = 2.0 * c * r;
  shot.values.push_back(u);
  const double ds = h / 2.0;
  for (std::size_t i = 1; i < n; ++i) {
    for (int sub = 0; sub < 2; ++sub) {
      double k1u, k1v, k2u, k2v, k3u, k3v, k4u, k4v;
      rhs(r, u, v, k1u, k1v);
      rhs(r + ds / 2, u + ds / 2 * k1u, v + ds / 2 * k1v, k2u, k2v);
      rhs(r + ds / 2, u + ds / 2 * k2u, v + ds / 2 * k2v, k3u, k3v);
      rhs(r + ds, u + ds * k3u, v + ds * k3v, k4u, k4v);
      u += ds / 6 * (k1u + 2 * k2u + 2 * k3u + k4u);
      v += ds / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
      r += ds;
    }
    if (!std::isfinite(u) || u <= 0.0) {
      shot.outcome = ShotOutcome::Overshoot;
      shot.stop = i;
      return shot;
    }
    if (v > 0.0) {
      shot.outcome = ShotOutcome::Undershoot;
      shot.stop = i;
      return shot;
    }
    shot.values.push_back(u);
  }
  shot.outcome = ShotOutcome::Reached;
  shot.stop = n;
  return shot;
}

/// Bisection on u(0) between an undershoot and an overshoot. Returns the
/// undershooting side, which is positive up to its turning point.
inline Shot bisect_shooting(const RadialGrid& g, const StationaryModel& m, double guess, double& a_out) {
  constexpr double a_min = 1e-3;
  constexpr double a_max = 1e3;
  guess = std::clamp(guess, a_min, a_max);
  double lo = guess, hi = guess;
  Shot s = shoot(g, m, guess);
  if (s.outcome == ShotOutcome::Overshoot) {
    while (true) {
      lo /= 1.25;
      if (lo < a_min) throw Error(ErrorKind::NonConvergence, "no undershooting central value above 1e-3");
      if (shoot(g, m, lo).outcome != ShotOutcome::Overshoot) break;
      hi = lo;
    }
  } else {
    while (true) {
      hi *= 1.25;
      if (hi > a_max) throw Error(ErrorKind::NonConvergence, "no overshooting central value below 1e3");
      if (shoot(g, m, hi).outcome == ShotOutcome::Overshoot) break;
      lo = hi;
    }
  }
  Shot best = shoot(g, m, lo);
  for (int it = 0; it < 200 && hi - lo > 4e-16 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    Shot t = shoot(g, m, mid);
    if (t.outcome == ShotOutcome::Overshoot) {
      hi = mid;
    } else {
      lo = mid;
      best = std::move(t);
      if (best.outcome == ShotOutcome::Reached) break;
    }
  }
  a_out = lo;
  return best;
}

/// Completes a truncated shot with the asymptotic tail r^{-(d-1)/2} e^{-sqrt(omega) r}.
inline std::vector<double> attach_tail(const RadialGrid& g, const StationaryModel& m, const Shot& s) {
  const std::size_t n = g.size();
  std::vector<double> u(n, 0.0);
  // Keep the monotone part of the shot: drop the last few nodes before the
  // stop where round-off has started to bend the profile.
  std::size_t keep = s.values.size();
  if (s.outcome != ShotOutcome::Reached) keep = keep > 8 ? keep - 4 : keep;
  keep = std::max<std::size_t>(keep, 1);
  for (std::size_t i = 0; i < keep; ++i) u[i] = s.values[i];
  const double k = std::sqrt(m.omega);
  const std::size_t j = keep - 1;
  for (std::size_t i = keep; i < n; ++i) {
    u[i] = u[j] * std::pow(g.r(j) / g.r(i), 0.5 * (m.d - 1)) * std::exp(-k * (g.r(i) - g.r(j)));
  }
  return u;
}

inline std::vector<double> stationary_residual(const RadialGrid& g, const StationaryModel& m,
                                               std::span<const double> u) {
  auto lap = laplacian<double>(g, u);
  std::vector<double> f(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) f[i] = m.source(u[i]) - lap[i];
  return f;
}

inline double h1_norm(const RadialGrid& g, std::span<const double> u) {
  return std::sqrt(dot(g, u, u) + grad_norm_sq<double>(g, u));
}

/// Newton iteration on the discrete stationary equation; returns the
/// iteration count and leaves the polished profile in `u`.
inline int newton_polish(const RadialGrid& g, const StationaryModel& m, std::vector<double>& u,
                         double rel_tol, int max_iter, double& residual_h1) {
  const std::size_t n = g.size();
  auto f = stationary_residual(g, m, u);
  residual_h1 = h1_norm(g, f);
  int it = 0;
  double prev = residual_h1;
  int stagnant = 0;
  for (; it < max_iter; ++it) {
    const double scale = h1_norm(g, u);
    if (residual_h1 <= rel_tol * scale) break;
    std::vector<double> pot(n);
    for (std::size_t i = 0; i < n; ++i) pot[i] = m.nonlinear_slope(u[i]);
    TriDiag jac = schrodinger_matrix(g, m.omega, pot);
    SparseSolver solver(jac.to_sparse());
    auto step = solver.solve(f);
    double damping = 1.0;
    std::vector<double> trial(n);
    double trial_res = 0.0;
    for (int ls = 0; ls < 20; ++ls) {
      for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] - damping * step[i];
      auto ft = stationary_residual(g, m, trial);
      trial_res = h1_norm(g, ft);
      if (trial_res < residual_h1 || ls == 19) {
        f = std::move(ft);
        break;
      }
      damping *= 0.5;
    }
    u = trial;
    residual_h1 = trial_res;
    if (residual_h1 > 0.5 * prev) {
      if (++stagnant >= 3) break;
    } else {
      stagnant = 0;
    }
    prev = residual_h1;
  }
  return it;
}

}  // namespace detail

/// Closed-form Aubin-Talenti profile W(r) = (sqrt(d(d-2)) / (1 + r^2))^{(d-2)/2}.
inline RadialField closed_form_W(const GridPtr& grid) {
  const int d = grid->dimension();
  const double c = std::sqrt(static_cast<double>(d * (d - 2)));
  return RadialField::from_function(grid, [&](double r) {
    return std::pow(c / (1.0 + r * r), 0.5 * (d - 2));
  });
}

/// Grid that resolves the decay scale of Phi_omega: r_max >= 12/sqrt(omega)
/// with the node spacing of the (n, r_max) baseline kept.
inline GridPtr recommended_grid(int d, double omega, std::size_t base_n = 8192, double base_rmax = 40.0) {
  const double rmax = std::max(base_rmax, 12.0 / std::sqrt(omega));
  const double h = base_rmax / static_cast<double>(base_n);
  const auto n = static_cast<std::size_t>(std::ceil(rmax / h));
  return make_grid(d, n, rmax);
}

struct SolverOptions {
  double residual_rel_tol = 1e-6;
  int max_newton = 12;
  std::optional<double> central_guess;  ///< overrides the T_omega-informed bracket start
};

/// Central value of U used to seed the combined-problem bracket. Solved once
/// per (d, p) on a modest grid.
inline double subcritical_central_value(int d, double p) {
  ModelParams mp{d, p, 1.0};
  auto g = make_grid(d, 2048, 24.0);
  auto model = detail::make_model(mp, StationaryProblem::Subcritical);
  double a = 0.0;
  detail::bisect_shooting(*g, model, 3.0, a);
  return a;
}

inline GroundState solve_stationary(const ModelParams& mp, const GridPtr& grid, StationaryProblem problem,
                                    const SolverOptions& opts = {}) {
  mp.validate(problem == StationaryProblem::Combined);
  if (grid->dimension() != mp.d) throw Error(ErrorKind::GridMismatch, "grid dimension differs from d");
  auto model = detail::make_model(mp, problem);
  double guess = 0.0;
  if (opts.central_guess) {
    guess = *opts.central_guess;
  } else {
    const double u0 = subcritical_central_value(mp.d, mp.p);
    guess = problem == StationaryProblem::Combined ? u0 * std::pow(mp.omega, 1.0 / (mp.p - 1.0)) : u0;
  }
  double a = 0.0;
  auto shot = detail::bisect_shooting(*grid, model, guess, a);
  auto u = detail::attach_tail(*grid, model, shot);
  double res = 0.0;
  const int iters = detail::newton_polish(*grid, model, u, 1e-3 * opts.residual_rel_tol, opts.max_newton, res);
  const double scale = detail::h1_norm(*grid, u);
  if (!(res <= opts.residual_rel_tol * scale)) {
    throw Error(ErrorKind::GridTooCoarse, "stationary residual stagnated at " + std::to_string(res / scale) +
                                              " relative");
  }
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!(u[i] > 0.0) || (i > 0 && !(u[i] < u[i - 1]))) {
      throw Error(ErrorKind::NonConvergence, "polished profile lost positivity or monotonicity at node " +
                                                 std::to_string(i));
    }
  }
  GroundState gs;
  gs.params = mp;
  if (problem == StationaryProblem::Subcritical) gs.params.omega = 1.0;
  gs.problem = problem;
  gs.profile = RadialField::from_real(grid, u);
  gs.central_value = u[0];
  gs.shooting_value = a;
  gs.residual_H1 = res;
  gs.newton_iterations = iters;
  gs.mass_value = mass(gs.profile);
  if (problem == StationaryProblem::Combined) {
    gs.action = S_omega(gs.profile, gs.params);
  } else {
    gs.action = dagger_functionals(gs.profile, gs.params).S;
  }
  return gs;
}

/// Operator L_+ = omega - Lap - p Phi^{p-1} - (2^*-1) Phi^{4/(d-2)} on real radial fields.
inline TriDiag assemble_L_plus(const GroundState& gs) {
  auto model = detail::make_model(gs.params, gs.problem);
  const auto phi = gs.profile.real_part();
  std::vector<double> pot(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) pot[i] = model.nonlinear_slope(phi[i]);
  return schrodinger_matrix(gs.grid(), model.omega, pot);
}

/// Operator L_- = omega - Lap - Phi^{p-1} - Phi^{4/(d-2)}.
inline TriDiag assemble_L_minus(const GroundState& gs) {
  auto model = detail::make_model(gs.params, gs.problem);
  const auto phi = gs.profile.real_part();
  std::vector<double> pot(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) {
    pot[i] = pow_abs(phi[i], model.p - 1.0) + model.crit_coeff * pow_abs(phi[i], model.crit_power);
  }
  return schrodinger_matrix(gs.grid(), model.omega, pot);
}

/// Solves L_+ Phi' = -Phi for the omega-derivative of the ground state.
inline RadialField solve_phi_prime(const GroundState& gs) {
  const auto& g = gs.grid();
  TriDiag lp = assemble_L_plus(gs);
  auto [lo, hi] = lp.gershgorin();
  const double cond = std::max(std::abs(lo), std::abs(hi)) / lp.smallest_abs_eigenvalue();
  if (!(cond < 1e12)) {
    throw Error(ErrorKind::SingularOperator, "L_+ condition estimate " + std::to_string(cond));
  }
  auto phi = gs.profile.real_part();
  std::vector<double> rhs(phi.size());
  for (std::size_t i = 0; i < phi.size(); ++i) rhs[i] = -phi[i];
  SparseSolver solver(lp.to_sparse());
  auto x = solver.solve(rhs);
  // One step of iterative refinement.
  auto r = lp(x);
  for (std::size_t i = 0; i < r.size(); ++i) r[i] = rhs[i] - r[i];
  auto dx = solver.solve(r);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] += dx[i];
  r = lp(x);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    num += g.w(i) * (r[i] - rhs[i]) * (r[i] - rhs[i]);
    den += g.w(i) * rhs[i] * rhs[i];
  }
  if (!(std::sqrt(num / den) <= 1e-8)) {
    throw Error(ErrorKind::SingularOperator, "L_+ solve residual " + std::to_string(std::sqrt(num / den)));
  }
  return RadialField::from_real(gs.grid_ptr(), x);
}

/// Ground state of the combined problem with its omega-derivative.
inline GroundState solve_phi(const ModelParams& mp, const GridPtr& grid, const SolverOptions& opts = {}) {
  GroundState gs = solve_stationary(mp, grid, StationaryProblem::Combined, opts);
  gs.omega_derivative = solve_phi_prime(gs);
  return gs;
}

/// Positive solution U of the subcritical problem u - Lap u - u^p = 0.
inline GroundState solve_U(int d, double p, const GridPtr& grid, const SolverOptions& opts = {}) {
  ModelParams mp{d, p, 1.0};
  return solve_stationary(mp, grid, StationaryProblem::Subcritical, opts);
}

/// U' = U/(p-1) + r U_r / 2, the formal limit of omega T_omega Phi'_omega.
inline RadialField U_prime_limit(const GroundState& u_state) {
  const auto& g = u_state.grid();
  const auto u = u_state.profile.real_part();
  const double p = u_state.params.p;
  std::vector<double> out(u.size());
  const std::size_t n = u.size();
  for (std::size_t i = 0; i < n; ++i) {
    double du = 0.0;
    if (i == 0) {
      du = (u[1] - u[0]) / g.spacing() * 0.5;  // u'(0) = 0 by symmetry
    } else if (i + 1 < n) {
      du = (u[i + 1] - u[i - 1]) / (2.0 * g.spacing());
    } else {
      du = (u[i] - u[i - 1]) / g.spacing();
    }
    out[i] = u[i] / (p - 1.0) + 0.5 * g.r(i) * du;
  }
  return RadialField::from_real(u_state.grid_ptr(), out);
}

// ---------------------------------------------------------------------------
// m_omega curve.

/// Monotone piecewise-cubic (Fritsch-Carlson) interpolant.
class MonotoneCubic {
 public:
  MonotoneCubic() = default;
  MonotoneCubic(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n < 2) throw Error(ErrorKind::Domain, "interpolant needs at least two samples");
    std::vector<double> delta(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) delta[i] = (y_[i + 1] - y_[i]) / (x_[i + 1] - x_[i]);
    m_.assign(n, 0.0);
    m_[0] = delta[0];
    m_[n - 1] = delta[n - 2];
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (delta[i - 1] * delta[i] <= 0.0) {
        m_[i] = 0.0;
      } else {
        const double w1 = 2.0 * (x_[i + 1] - x_[i]) + (x_[i] - x_[i - 1]);
        const double w2 = (x_[i + 1] - x_[i]) + 2.0 * (x_[i] - x_[i - 1]);
        m_[i] = (w1 + w2) / (w1 / delta[i - 1] + w2 / delta[i]);
      }
    }
  }

  double front() const { return x_.front(); }
  double back() const { return x_.back(); }

  double operator()(double x) const { return eval(x, false); }
  double derivative(double x) const { return eval(x, true); }

 private:
  double eval(double x, bool deriv) const {
    std::size_t i = 0;
    if (x <= x_.front()) {
      i = 0;
    } else if (x >= x_.back()) {
      i = x_.size() - 2;
    } else {
      i = static_cast<std::size_t>(std::upper_bound(x_.begin(), x_.end(), x) - x_.begin()) - 1;
    }
    const double hseg = x_[i + 1] - x_[i];
    const double t = (x - x_[i]) / hseg;
    const double h00 = 2 * t * t * t - 3 * t * t + 1, h10 = t * t * t - 2 * t * t + t;
    const double h01 = -2 * t * t * t + 3 * t * t, h11 = t * t * t - t * t;
    if (!deriv) return h00 * y_[i] + h10 * hseg * m_[i] + h01 * y_[i + 1] + h11 * hseg * m_[i + 1];
    const double d00 = 6 * t * t - 6 * t, d10 = 3 * t * t - 4 * t + 1;
    const double d01 = -6 * t * t + 6 * t, d11 = 3 * t * t - 2 * t;
    return (d00 * y_[i] + d01 * y_[i + 1]) / hseg + d10 * m_[i] + d11 * m_[i + 1];
  }

  std::vector<double> x_, y_, m_;
};

struct MCurveSample {
  double omega = 0.0;
  double m = 0.0;
  double mass = 0.0;
  double phi0 = 0.0;
  double residual = 0.0;
};

/// Sampled m_omega and M(Phi_omega) with monotone interpolants and the
/// inverse alpha(M) of the decreasing mass curve.
class MCurve {
 public:
  MCurve() = default;
  explicit MCurve(std::vector<MCurveSample> samples) : samples_(std::move(samples)) {
    std::vector<double> w, m, mass;
    for (const auto& s : samples_) {
      w.push_back(s.omega);
      m.push_back(s.m);
      mass.push_back(s.mass);
    }
    m_ = MonotoneCubic(w, m);
    mass_ = MonotoneCubic(w, mass);
  }

  const std::vector<MCurveSample>& samples() const { return samples_; }
  double omega_min() const { return samples_.front().omega; }
  double omega_max() const { return samples_.back().omega; }

  double m(double omega) const { return m_(omega); }
  double mass(double omega) const { return mass_(omega); }
  double dm_domega(double omega) const { return m_.derivative(omega); }

  /// alpha(M): the frequency whose ground state carries mass M.
  double alpha(double M) const {
    const double m_hi = mass(omega_min());
    const double m_lo = mass(omega_max());
    if (!(M >= m_lo && M <= m_hi)) {
      throw Error(ErrorKind::OutOfRange, "mass " + std::to_string(M) + " outside tabulated range [" +
                                             std::to_string(m_lo) + ", " + std::to_string(m_hi) + "]");
    }
    double lo = omega_min(), hi = omega_max();
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      if (mass(mid) > M) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  /// Checks the monotonicity the curve must have: m up, M down.
  bool is_monotone() const {
    for (std::size_t i = 1; i < samples_.size(); ++i) {
      if (!(samples_[i].m > samples_[i - 1].m) || !(samples_[i].mass < samples_[i - 1].mass)) return false;
    }
    return true;
  }

 private:
  std::vector<MCurveSample> samples_;
  MonotoneCubic m_;
  MonotoneCubic mass_;
};

/// Ground states at each frequency; a null grid selects recommended_grid per frequency.
inline MCurve build_mcurve(const std::vector<double>& omegas, const ModelParams& mp, const GridPtr& grid,
                           const SolverOptions& opts = {}) {
  if (omegas.size() < 2) throw Error(ErrorKind::Domain, "m-curve needs at least two frequencies");
  for (std::size_t i = 1; i < omegas.size(); ++i) {
    if (!(omegas[i] > omegas[i - 1])) throw Error(ErrorKind::Domain, "m-curve frequencies must ascend");
  }
  std::vector<MCurveSample> samples;
  SolverOptions o = opts;
  const double u0 = subcritical_central_value(mp.d, mp.p);
  for (double w : omegas) {
    if (!o.central_guess) o.central_guess = u0 * std::pow(w, 1.0 / (mp.p - 1.0));
    auto g = grid ? grid : recommended_grid(mp.d, w);
    auto gs = solve_stationary(mp.with_omega(w), g, StationaryProblem::Combined, o);
    samples.push_back({w, gs.action, gs.mass_value, gs.central_value, gs.residual_H1});
    o.central_guess.reset();
  }
  return MCurve(std::move(samples));
}

}  // namespace nlsr
