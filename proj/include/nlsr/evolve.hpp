#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlsr/errors.hpp"
#include "nlsr/functionals.hpp"
#include "nlsr/linalg.hpp"
#include "nlsr/modes.hpp"

namespace nlsr {

struct EvolveConfig {
  double dt = 1e-3;
  double t_max = 1.0;
  int stride = 10;                   ///< diagnostics every `stride` base steps
  double max_phase = 0.1;            ///< nonlinear phase per step that triggers halving
  double dt_floor = 1e-10;           ///< dt below this is blowup evidence
  double grad_ratio_max = 1e3;       ///< ||grad psi|| / ||grad psi0|| above this is blowup evidence
  double resolve_cells = 10.0;       ///< blowup evidence once sup|psi| exceeds a W-bubble this many cells wide; 0 disables
  bool nonlinear = true;             ///< false evolves the free equation
  int order = 2;                     ///< 2: Strang; 4: triple-jump composition of Strang steps
  double absorb_width = 0.0;         ///< outer band (fraction of r_max) with a damping potential; 0 disables
  double absorb_strength = 1.0;
  bool stop_on_exit = false;         ///< stop once d_tilde exceeds exit_level (requires a frame)
  double exit_level = 0.0;

  void validate() const {
    if (!(dt > 0.0) || !(t_max > 0.0) || stride < 1 || !(max_phase > 0.0) || !(dt_floor > 0.0) ||
        !(grad_ratio_max > 1.0) || (order != 2 && order != 4) || resolve_cells < 0.0 || absorb_width < 0.0 || absorb_width >= 1.0) {
      throw Error(ErrorKind::Domain, "invalid evolution configuration");
    }
  }
};

enum class RunStatus { Completed, Blowup, GaugeDegenerate, Exited };

inline std::string to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Completed: return "completed";
    case RunStatus::Blowup: return "blowup";
    case RunStatus::GaugeDegenerate: return "gauge-degenerate";
    case RunStatus::Exited: return "exited";
  }
  return "?";
}

struct TrajectoryRow {
  double t = 0.0;
  double mass = 0.0;
  double hamiltonian = 0.0;
  double K = 0.0;
  double grad_norm = 0.0;
  double second_moment = 0.0;
  double d_omega = std::numeric_limits<double>::quiet_NaN();
  double d_tilde = std::numeric_limits<double>::quiet_NaN();
  double lambda_plus = std::numeric_limits<double>::quiet_NaN();
  double lambda_minus = std::numeric_limits<double>::quiet_NaN();
  double theta = std::numeric_limits<double>::quiet_NaN();
  double lp1_norm = 0.0;     ///< ||psi||_{L^{p+1}}, used by the scattering proxy
  double amplitude = 0.0;    ///< max |psi|
};

struct TrajectoryRecord {
  std::vector<TrajectoryRow> rows;
  RunStatus status = RunStatus::Completed;
  std::string reason;
  RadialField final_state;
  double min_dt = 0.0;
  long steps = 0;
  double mass_drift = 0.0;         ///< |M(T) - M(0)| / M(0) / T
  double hamiltonian_drift = 0.0;  ///< |H(T) - H(0)| / max(|H(0)|, ||grad psi0||^2) / T
};

/// Second-order Strang splitting: half nonlinear phase rotation, Crank-Nicolson
/// linear step, half nonlinear rotation. Crank-Nicolson factorizations are
/// cached per step size.
class Stepper {
 public:
  Stepper(GridPtr grid, const ModelParams& mp, const EvolveConfig& cfg)
      : grid_(std::move(grid)), mp_(mp), cfg_(cfg), lap_(laplacian_matrix(*grid_)) {
    if (cfg_.absorb_width > 0.0) {
      const double r0 = grid_->r_max() * (1.0 - cfg_.absorb_width);
      const double wdt = grid_->r_max() * cfg_.absorb_width;
      damping_.assign(grid_->size(), 0.0);
      for (std::size_t i = 0; i < grid_->size(); ++i) {
        const double x = (grid_->r(i) - r0) / wdt;
        if (x > 0.0) damping_[i] = cfg_.absorb_strength * x * x;
      }
    }
  }

  const ModelParams& params() const { return mp_; }

  static double amplitude(std::span<const Complex> psi) {
    double m = 0.0;
    for (const auto& z : psi) m = std::max(m, std::norm(z));
    return std::sqrt(m);
  }

  /// Nonlinear phase dt * g(a) of one step at peak amplitude a.
  double phase(double a, double dt) const { return cfg_.nonlinear ? dt * nonlinear_potential(a, mp_) : 0.0; }

  /// One step in place (Strang, or its fourth-order triple jump). Throws
  /// NonFinite on overflow.
  void step(std::vector<Complex>& psi, double dt) {
    if (cfg_.order == 4) {
      const double c = std::cbrt(2.0);
      const double w1 = 1.0 / (2.0 - c), w0 = -c / (2.0 - c);
      strang(psi, w1 * dt);
      strang(psi, w0 * dt);
      strang(psi, w1 * dt);
    } else {
      strang(psi, dt);
    }
    for (const auto& z : psi) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        throw Error(ErrorKind::NonFinite, "non-finite value after a step");
      }
    }
  }

 private:
  void strang(std::vector<Complex>& psi, double dt) {
    half_nonlinear(psi, 0.5 * dt);
    linear(psi, dt);
    half_nonlinear(psi, 0.5 * dt);
  }

  void half_nonlinear(std::vector<Complex>& psi, double h) const {
    const bool nl = cfg_.nonlinear;
    for (std::size_t i = 0; i < psi.size(); ++i) {
      const double g = nl ? nonlinear_potential(std::abs(psi[i]), mp_) : 0.0;
      Complex f = std::polar(1.0, h * g);
      if (!damping_.empty()) f *= std::exp(-h * damping_[i]);
      psi[i] *= f;
    }
  }

  void linear(std::vector<Complex>& psi, double dt) {
    const auto& solver = cn_solver(dt);
    const std::size_t n = psi.size();
    const Complex a(0.0, 0.5 * dt);
    std::vector<Complex> rhs(n);
    for (std::size_t i = 0; i < n; ++i) {
      Complex s = lap_.diag[i] * psi[i];
      if (i > 0) s += lap_.lower[i] * psi[i - 1];
      if (i + 1 < n) s += lap_.upper[i] * psi[i + 1];
      rhs[i] = psi[i] + a * s;
    }
    solver.solve_in_place(rhs);
    psi.swap(rhs);
  }

  const ComplexTriSolver& cn_solver(double dt) {
    auto it = cache_.find(dt);
    if (it != cache_.end()) return it->second;
    if (cache_.size() > 64) cache_.clear();
    const std::size_t n = lap_.size();
    const Complex a(0.0, 0.5 * dt);
    std::vector<Complex> lo(n), di(n), up(n);
    for (std::size_t i = 0; i < n; ++i) {
      lo[i] = -a * lap_.lower[i];
      di[i] = 1.0 - a * lap_.diag[i];
      up[i] = -a * lap_.upper[i];
    }
    return cache_.emplace(dt, ComplexTriSolver(std::move(lo), std::move(di), std::move(up))).first->second;
  }

  GridPtr grid_;
  ModelParams mp_;
  EvolveConfig cfg_;
  TriDiag lap_;
  std::vector<double> damping_;
  std::map<double, ComplexTriSolver> cache_;
};

/// Peak of the critical bubble W_lambda (W(0) lambda^{-(d-2)/2}) at width
/// lambda = cells * h: beyond it the profile is no longer resolved.
inline double resolution_amplitude(const RadialGrid& g, double cells) {
  const int d = g.dimension();
  const double w0 = std::pow(static_cast<double>(d * (d - 2)), 0.25 * (d - 2));
  return w0 * std::pow(cells * g.spacing(), -0.5 * (d - 2));
}

/// Single step on a field (convenience wrapper).
inline RadialField step(const RadialField& psi, double dt, const ModelParams& mp, const EvolveConfig& cfg = {}) {
  Stepper s(psi.grid_ptr(), mp, cfg);
  std::vector<Complex> v(psi.values().begin(), psi.values().end());
  s.step(v, dt);
  return RadialField::from_complex(psi.grid_ptr(), std::move(v));
}

namespace detail {

inline TrajectoryRow diagnostics(double t, const RadialField& psi, const ModelParams& mp, const OrbitFrame* frame,
                                 const DistanceConfig& dcfg) {
  TrajectoryRow r;
  r.t = t;
  const auto n = norm_parts(psi, mp);
  r.mass = 0.5 * n.l2_sq;
  r.hamiltonian = hamiltonian(n, mp);
  r.K = K_functional(n, mp);
  r.grad_norm = std::sqrt(n.grad_sq);
  r.second_moment = second_moment(psi);
  r.lp1_norm = n.lp1 > 0.0 ? std::pow(n.lp1, 1.0 / (mp.p + 1.0)) : 0.0;
  for (const auto& z : psi.values()) r.amplitude = std::max(r.amplitude, std::abs(z));
  if (frame) {
    const auto c = measure(psi, *frame, dcfg);
    r.d_omega = c.d_omega;
    r.d_tilde = c.d_tilde;
    r.lambda_plus = c.lambda_plus;
    r.lambda_minus = c.lambda_minus;
    r.theta = c.theta;
  }
  return r;
}

}  // namespace detail

/// Integrates psi0 to cfg.t_max (or a terminal event), recording diagnostics
/// every `stride` base steps. With a frame, mode coordinates and distances
/// are recorded as well. The observer sees each row and may end the run by
/// returning false.
inline TrajectoryRecord run(const RadialField& psi0, const EvolveConfig& cfg, const ModelParams& mp,
                            const OrbitFrame* frame = nullptr, const DistanceConfig& dcfg = {},
                            const std::function<bool(const TrajectoryRow&)>& on_row = {}) {
  cfg.validate();
  mp.validate(false);
  if (psi0.grid().dimension() != mp.d) throw Error(ErrorKind::GridMismatch, "grid dimension differs from d");
  Stepper stepper(psi0.grid_ptr(), mp, cfg);
  TrajectoryRecord rec;
  std::vector<Complex> psi(psi0.values().begin(), psi0.values().end());
  auto as_field = [&] { return RadialField::from_complex(psi0.grid_ptr(), psi); };

  rec.rows.push_back(detail::diagnostics(0.0, psi0, mp, frame, dcfg));
  const double g0 = std::max(rec.rows.front().grad_norm, 1e-300);
  const double M0 = rec.rows.front().mass;
  const double H0 = rec.rows.front().hamiltonian;
  const double amp_cap = cfg.resolve_cells > 0.0 && cfg.nonlinear
                             ? resolution_amplitude(psi0.grid(), cfg.resolve_cells)
                             : std::numeric_limits<double>::infinity();
  rec.min_dt = cfg.dt;

  const long total = std::lround(cfg.t_max / cfg.dt);
  double t = 0.0;
  bool done = false;
  for (long k = 1; k <= total && !done; ++k) {
    // Advance one base step, subdividing while the nonlinear phase is too large.
    double remaining = cfg.dt;
    while (remaining > 0.0) {
      const double a = Stepper::amplitude(psi);
      if (a > amp_cap) {
        rec.status = RunStatus::Blowup;
        rec.reason = "concentrated below grid resolution (sup|psi| > " + std::to_string(amp_cap) + ")";
        done = true;
        break;
      }
      double h = remaining;
      while (stepper.phase(a, h) > cfg.max_phase && h >= cfg.dt_floor) h *= 0.5;
      if (h < cfg.dt_floor) {
        rec.status = RunStatus::Blowup;
        rec.reason = "step size fell below " + std::to_string(cfg.dt_floor);
        done = true;
        break;
      }
      try {
        stepper.step(psi, h);
      } catch (const Error& e) {
        rec.status = RunStatus::Blowup;
        rec.reason = e.what();
        done = true;
        break;
      }
      rec.min_dt = std::min(rec.min_dt, h);
      ++rec.steps;
      remaining -= h;
      if (remaining < 1e-15 * cfg.dt) remaining = 0.0;
    }
    if (done) {
      t = static_cast<double>(k - 1) * cfg.dt + (cfg.dt - remaining);
      break;
    }
    t = static_cast<double>(k) * cfg.dt;
    if (k % cfg.stride != 0 && k != total) continue;

    const auto field = as_field();
    TrajectoryRow row;
    try {
      row = detail::diagnostics(t, field, mp, frame, dcfg);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DegenerateGauge) throw;
      rec.status = RunStatus::GaugeDegenerate;
      rec.reason = e.what();
      break;
    }
    rec.rows.push_back(row);
    if (on_row && !on_row(row)) {
      rec.reason = "stopped by observer";
      break;
    }
    if (row.grad_norm > cfg.grad_ratio_max * g0) {
      rec.status = RunStatus::Blowup;
      rec.reason = "gradient norm grew by more than " + std::to_string(cfg.grad_ratio_max);
      break;
    }
    if (cfg.stop_on_exit && frame && row.d_tilde > cfg.exit_level) {
      rec.status = RunStatus::Exited;
      rec.reason = "left the orbit neighbourhood";
      break;
    }
  }
  rec.final_state = as_field();
  // Terminal snapshot at the moment blowup evidence appeared.
  if (rec.status == RunStatus::Blowup && t > rec.rows.back().t && Stepper::amplitude(psi) < 1e150) {
    try {
      rec.rows.push_back(detail::diagnostics(t, rec.final_state, mp, frame, dcfg));
      if (on_row) on_row(rec.rows.back());  // terminal row; the return value is moot
    } catch (const Error&) {
    }
  }
  const auto& last = rec.rows.back();
  if (last.t > 0.0) {
    rec.mass_drift = std::abs(last.mass - M0) / M0 / last.t;
    rec.hamiltonian_drift = std::abs(last.hamiltonian - H0) / std::max(std::abs(H0), g0 * g0) / last.t;
  }
  return rec;
}

}  // namespace nlsr
