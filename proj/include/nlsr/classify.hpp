#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "nlsr/errors.hpp"
#include "nlsr/evolve.hpp"
#include "nlsr/functionals.hpp"
#include "nlsr/groundstate.hpp"
#include "nlsr/modes.hpp"
#include "nlsr/spectrum.hpp"

namespace nlsr {

// ---------------------------------------------------------------------------
// Threshold function.

/// epsilon_omega(M) built on a sampled m-curve. The per-frequency margin is
/// eps(w) = eps_rel * m_w; omega_star is the top of the tabulated range.
class ThresholdTable {
 public:
  ThresholdTable(MCurve curve, double omega, double eps_rel = 0.01)
      : curve_(std::move(curve)), omega_(omega), omega_star_(curve_.omega_max()), eps_rel_(eps_rel) {
    if (!(omega_ >= curve_.omega_min() && omega_ < omega_star_)) {
      throw Error(ErrorKind::Domain, "reference frequency must lie in [omega_min, omega_star)");
    }
    if (!(eps_rel_ > 0.0)) throw Error(ErrorKind::Domain, "eps_rel must be positive");
    m_omega_ = curve_.m(omega_);
    M_omega_ = curve_.mass(omega_);
    M_star_ = curve_.mass(omega_star_);
  }

  const MCurve& curve() const { return curve_; }
  double omega() const { return omega_; }
  double omega_star() const { return omega_star_; }
  double eps(double w) const { return eps_rel_ * curve_.m(w); }
  double mass_at_omega() const { return M_omega_; }
  double mass_at_star() const { return M_star_; }

  /// The four-branch threshold. Throws OutOfRange when alpha(M) is needed
  /// outside the tabulated frequencies.
  double epsilon_omega(double M) const {
    if (!(M >= 0.0)) throw Error(ErrorKind::Domain, "mass must be non-negative");
    if (M <= M_star_) {
      return curve_.m(omega_star_) - m_omega_ - (omega_star_ - omega_) * M_star_;
    }
    if (M == M_omega_) return eps(omega_);
    const double a = curve_.alpha(M);
    if (M < M_omega_) return eps(a) + curve_.m(a) - m_omega_ - (a - omega_) * M;
    return eps(a) + (omega_ - a) * M - (m_omega_ - curve_.m(a));
  }

  /// S_omega(u) < m_omega + epsilon_omega(M(u)).
  bool admissible(double action, double M) const { return action < m_omega_ + epsilon_omega(M); }

 private:
  MCurve curve_;
  double omega_;
  double omega_star_;
  double eps_rel_;
  double m_omega_ = 0.0;
  double M_omega_ = 0.0;
  double M_star_ = 0.0;
};

/// Geometric frequency grid from omega/5 to 4 omega.
inline std::vector<double> default_curve_omegas(double omega, int points = 12) {
  std::vector<double> w(points);
  const double lo = omega / 5.0, hi = 4.0 * omega;
  for (int i = 0; i < points; ++i) w[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
  return w;
}

// ---------------------------------------------------------------------------
// Labels and scenarios.

enum class Label { Scatter, Blowup, Trap, Undecided };

inline std::string to_string(Label l) {
  switch (l) {
    case Label::Scatter: return "scatter";
    case Label::Blowup: return "blowup";
    case Label::Trap: return "trap";
    case Label::Undecided: return "undecided";
  }
  return "?";
}

inline Label parse_label(const std::string& s) {
  for (Label l : {Label::Scatter, Label::Blowup, Label::Trap, Label::Undecided}) {
    if (to_string(l) == s) return l;
  }
  throw Error(ErrorKind::Parse, "unknown label '" + s + "'");
}

/// Scenario index 1..9 for a (forward, backward) pair; nullopt if either is undecided.
inline std::optional<int> scenario_index(Label fwd, Label bwd) {
  using L = Label;
  if (fwd == L::Undecided || bwd == L::Undecided) return std::nullopt;
  static constexpr int table[3][3] = {
      // bwd: Scatter, Blowup, Trap
      {1, 3, 6},  // fwd Scatter
      {4, 2, 8},  // fwd Blowup
      {5, 7, 9},  // fwd Trap
  };
  return table[static_cast<int>(fwd)][static_cast<int>(bwd)];
}

inline std::string scenario_name(std::optional<int> idx) {
  static const char* roman[] = {"i", "ii", "iii", "iv", "v", "vi", "vii", "viii", "ix"};
  return idx ? roman[*idx - 1] : "undecided";
}

// ---------------------------------------------------------------------------
// Sign function and one-pass monitor.

struct SignSample {
  double t = 0.0;
  int sign = 0;          ///< +1, -1, or 0 when unresolved
  bool from_lambda = false;
  bool marginal = false; ///< lambda_1 too small to carry a sign reliably
};

/// Per-row sign: sign(lambda_1) where d_tilde <= delta_E, sign(K) where
/// d_tilde >= delta_star; both must agree where the bands overlap.
inline std::vector<SignSample> sign_function(const std::vector<TrajectoryRow>& rows, double delta_E,
                                             double delta_star, double marginal_fraction = 0.01) {
  if (!(delta_star > 0.0 && delta_star < delta_E)) {
    throw Error(ErrorKind::Domain, "sign function needs 0 < delta_star < delta_E");
  }
  std::vector<SignSample> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    SignSample s;
    s.t = r.t;
    const bool near = r.d_tilde <= delta_E && std::isfinite(r.lambda_plus);
    const bool far = r.d_tilde >= delta_star;
    const double l1 = 0.5 * (r.lambda_plus + r.lambda_minus);
    const int s_l = near ? (l1 > 0.0) - (l1 < 0.0) : 0;
    const int s_k = far ? (r.K > 0.0) - (r.K < 0.0) : 0;
    const bool marginal = near && std::abs(l1) < marginal_fraction * delta_E;
    if (near && far && !marginal && s_l != s_k) {
      throw Error(ErrorKind::Inconsistent, "sign of lambda_1 and K disagree at t = " + std::to_string(r.t));
    }
    if (near) {
      s.sign = s_l;
      s.from_lambda = true;
      s.marginal = marginal;
    } else {
      s.sign = s_k;
    }
    out.push_back(s);
  }
  return out;
}

inline double one_pass_barrier(double R, double p) { return R + std::pow(R, std::min(3.0, p + 1.0) / 2.0); }

struct OnePassReport {
  double R = 0.0;
  double barrier = 0.0;
  bool entered = false;      ///< d_tilde dropped below R at some point
  double t_enter = 0.0;
  bool exited = false;       ///< later exceeded the barrier
  double t_exit = 0.0;
  bool returned = false;     ///< came back below R after exiting (one-pass violation at this resolution)
  double t_return = 0.0;
  bool stays_below() const { return entered && !exited; }
  bool permanent_exit() const { return exited && !returned; }
};

inline OnePassReport one_pass_monitor(const std::vector<TrajectoryRow>& rows, double R, double p) {
  OnePassReport rep;
  rep.R = R;
  rep.barrier = one_pass_barrier(R, p);
  for (const auto& r : rows) {
    if (!std::isfinite(r.d_tilde)) continue;
    if (!rep.entered) {
      if (r.d_tilde < R) {
        rep.entered = true;
        rep.t_enter = r.t;
      }
    } else if (!rep.exited) {
      if (r.d_tilde > rep.barrier) {
        rep.exited = true;
        rep.t_exit = r.t;
      }
    } else if (!rep.returned && r.d_tilde < R) {
      rep.returned = true;
      rep.t_return = r.t;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Run classification.

struct ClassifyConfig {
  ModelParams params;            ///< reference (d, p, omega)
  double dt = 2e-3;
  int order = 4;
  double horizon = 6.0;          ///< first decision horizon; doubled while undecided
  double horizon_max = 48.0;
  double sample_interval = 0.05; ///< time between diagnostic rows
  double absorb_width = 0.25;
  double absorb_strength = 1.0;
  double resolve_cells = 10.0;
  double delta_star_ratio = 0.25;
  double decay_factor = 4.0;     ///< scattering proxy: L^{p+1} decay from the post-ejection peak
  double eps_rel = 0.01;
  bool strict = false;
  std::uint64_t seed = 0;
};

struct DirectionEvidence {
  Label label = Label::Undecided;
  std::string reason;
  double horizon = 0.0;          ///< time span examined
  RunStatus status = RunStatus::Completed;
  double t_first_exit = -1.0;    ///< first time d_tilde > delta_E, or -1
  int K_sign_changes = 0;
  int final_K_sign = 0;
  double d_tilde_min = 0.0;
  double d_tilde_max = 0.0;
  double lp1_peak = 0.0;
  double lp1_final = 0.0;
  std::vector<TrajectoryRow> rows;
};

struct Classification {
  Label forward = Label::Undecided;
  Label backward = Label::Undecided;
  std::optional<int> scenario;
  bool admissible = true;
  std::string refusal;
  bool backward_by_symmetry = false;
  double alpha = 0.0;            ///< mass-matched frequency
  double mu = 0.0;
  double delta_E = 0.0;
  double delta_star = 0.0;
  double S_omega = 0.0;
  double mass = 0.0;
  double epsilon_omega = std::numeric_limits<double>::quiet_NaN();
  DirectionEvidence fwd;
  DirectionEvidence bwd;
};

/// Frequency whose ground state has mass M, by secant iteration in log-log
/// coordinates on direct ground-state solves over `grid`.
inline double mass_matched_omega(double M, const ModelParams& mp, const GridPtr& grid, double rel_tol = 1e-11) {
  auto mass_at = [&](double w) { return solve_stationary(mp.with_omega(w), grid, StationaryProblem::Combined).mass_value; };
  double w0 = mp.omega, M0 = mass_at(w0);
  if (std::abs(M0 - M) <= rel_tol * M) return w0;
  double w1 = w0 * (M0 > M ? 1.2 : 1.0 / 1.2), M1 = mass_at(w1);
  for (int it = 0; it < 40; ++it) {
    const double slope = (std::log(M1) - std::log(M0)) / (std::log(w1) - std::log(w0));
    if (!(slope < 0.0)) throw Error(ErrorKind::NonConvergence, "mass curve not decreasing near the target");
    double step = (std::log(M) - std::log(M1)) / slope;
    step = std::clamp(step, -1.0, 1.0);
    const double w2 = w1 * std::exp(step);
    w0 = w1;
    M0 = M1;
    w1 = w2;
    M1 = mass_at(w1);
    if (std::abs(M1 - M) <= rel_tol * M) return w1;
  }
  throw Error(ErrorKind::NonConvergence, "mass-matched frequency search did not converge");
}

namespace detail {

/// Label from the rows up to horizon T (rows must be ordered in time).
inline void label_at(DirectionEvidence& ev, double T, double delta_E, double delta_star, double decay_factor) {
  std::vector<const TrajectoryRow*> window;
  double t_exit = -1.0;
  for (const auto& r : ev.rows) {
    if (r.t > T + 1e-12) break;
    if (t_exit < 0.0 && r.d_tilde > delta_E) t_exit = r.t;
    if (r.t >= 0.5 * T - 1e-12) window.push_back(&r);
  }
  if (window.empty()) return;
  const bool trapped = std::all_of(window.begin(), window.end(), [&](auto* r) { return r->d_tilde <= delta_E; });
  if (trapped) {
    ev.label = Label::Trap;
    ev.reason = "d_tilde <= delta_E over [T/2, T]";
    return;
  }
  const bool k_pos = std::all_of(window.begin(), window.end(), [](auto* r) { return r->K > 0.0; });
  const bool far = std::all_of(window.begin(), window.end(), [&](auto* r) { return r->d_tilde >= delta_star; });
  if (k_pos && far && t_exit >= 0.0) {
    double peak = 0.0;
    for (const auto& r : ev.rows) {
      if (r.t > T + 1e-12) break;
      if (r.t >= t_exit) peak = std::max(peak, r.lp1_norm);
    }
    if (window.back()->lp1_norm * decay_factor <= peak) {
      ev.label = Label::Scatter;
      ev.reason = "K > 0 and d_tilde >= delta_star over [T/2, T]; L^{p+1} norm decayed by the required factor";
    }
  }
}

inline void summarize(DirectionEvidence& ev, double delta_E) {
  int prev = 0;
  ev.d_tilde_min = std::numeric_limits<double>::infinity();
  ev.d_tilde_max = 0.0;
  for (const auto& r : ev.rows) {
    const int s = (r.K > 0.0) - (r.K < 0.0);
    if (s != 0 && prev != 0 && s != prev) ++ev.K_sign_changes;
    if (s != 0) prev = s;
    if (ev.t_first_exit < 0.0 && r.d_tilde > delta_E) ev.t_first_exit = r.t;
    ev.d_tilde_min = std::min(ev.d_tilde_min, r.d_tilde);
    ev.d_tilde_max = std::max(ev.d_tilde_max, r.d_tilde);
    ev.lp1_peak = std::max(ev.lp1_peak, r.lp1_norm);
  }
  ev.final_K_sign = prev;
  if (!ev.rows.empty()) ev.lp1_final = ev.rows.back().lp1_norm;
}

/// One direction: integrate with horizon doubling until a label is reached.
inline DirectionEvidence classify_direction(const RadialField& psi0, const ClassifyConfig& cc, const ModelParams& mp,
                                            const OrbitFrame& frame, const DistanceConfig& dcfg, double delta_star) {
  DirectionEvidence ev;
  EvolveConfig ec;
  ec.dt = cc.dt;
  ec.order = cc.order;
  ec.t_max = cc.horizon_max;
  ec.stride = std::max(1, static_cast<int>(std::lround(cc.sample_interval / cc.dt)));
  ec.absorb_width = cc.absorb_width;
  ec.absorb_strength = cc.absorb_strength;
  ec.resolve_cells = cc.resolve_cells;

  double next_check = cc.horizon;
  auto rec = run(psi0, ec, mp, &frame, dcfg, [&](const TrajectoryRow& r) {
    ev.rows.push_back(r);
    if (r.t + 1e-12 < next_check) return true;
    label_at(ev, next_check, dcfg.delta_E, delta_star, cc.decay_factor);
    ev.horizon = next_check;
    if (ev.label != Label::Undecided) return false;
    next_check *= 2.0;
    return next_check <= cc.horizon_max + 1e-12;
  });
  ev.rows = rec.rows;  // includes the initial and any terminal row
  ev.status = rec.status;
  if (rec.status == RunStatus::Blowup) {
    ev.horizon = ev.rows.back().t;
    const double t_end = ev.rows.back().t;
    const bool k_neg = std::all_of(ev.rows.begin(), ev.rows.end(),
                                   [&](const TrajectoryRow& r) { return r.t < 0.5 * t_end || r.K < 0.0; });
    ev.label = k_neg ? Label::Blowup : Label::Undecided;
    ev.reason = k_neg ? "blowup evidence (" + rec.reason + ") with K < 0 over the final half"
                      : "blowup evidence (" + rec.reason + ") without a negative K history";
  } else if (rec.status == RunStatus::GaugeDegenerate) {
    ev.label = Label::Undecided;
    ev.reason = rec.reason;
  } else if (ev.label == Label::Undecided) {
    if (ev.horizon == 0.0) ev.horizon = ev.rows.back().t;
    ev.reason = "no criterion met by t = " + std::to_string(ev.rows.back().t);
  }
  summarize(ev, dcfg.delta_E);
  return ev;
}

}  // namespace detail

/// Forward/backward labels and scenario for initial data psi0 (on its own
/// grid). The orbit frame is built at the mass-matched frequency.
inline Classification classify_run(const RadialField& psi0, const ClassifyConfig& cc,
                                   const ThresholdTable* table = nullptr) {
  const ModelParams& mp = cc.params;
  mp.validate();
  Classification cl;
  cl.mass = mass(psi0);
  cl.S_omega = S_omega(psi0, mp);
  if (table) {
    try {
      cl.epsilon_omega = table->epsilon_omega(cl.mass);
      cl.admissible = cl.S_omega < table->curve().m(mp.omega) + cl.epsilon_omega;
      if (!cl.admissible) cl.refusal = "S_omega(psi0) >= m_omega + epsilon_omega(M(psi0))";
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::OutOfRange) throw;
      cl.admissible = false;
      cl.refusal = std::string("threshold not evaluable: ") + e.what();
    }
  }
  if (cc.strict && !cl.admissible) return cl;

  const auto& grid = psi0.grid_ptr();
  cl.alpha = mass_matched_omega(cl.mass, mp, grid);
  const ModelParams mp_a = mp.with_omega(cl.alpha);
  const GroundState gs = solve_phi(mp_a, grid);
  const LinearizedOperators ops(gs);
  const SpectralData sd = solve_mu(ops, gs);
  cl.mu = sd.mu;
  const OrbitFrame frame(gs, sd);
  const auto cal = calibrate_delta_E(frame, cc.seed);
  cl.delta_E = cal.delta_E;
  cl.delta_star = cc.delta_star_ratio * cal.delta_E;
  const DistanceConfig dcfg{cal.delta_E};

  cl.fwd = detail::classify_direction(psi0, cc, mp, frame, dcfg, cl.delta_star);
  cl.forward = cl.fwd.label;
  if (psi0.is_real()) {
    // psi(-t) = conj(psi(t)) for real data: every diagnostic used for labels is conjugation invariant.
    cl.backward_by_symmetry = true;
    cl.backward = cl.forward;
  } else {
    cl.bwd = detail::classify_direction(psi0.conj(), cc, mp, frame, dcfg, cl.delta_star);
    cl.backward = cl.bwd.label;
  }
  cl.scenario = scenario_index(cl.forward, cl.backward);
  return cl;
}

}  // namespace nlsr
