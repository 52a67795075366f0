#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <random>
#include <vector>

#include "nlsr/errors.hpp"
#include "nlsr/functionals.hpp"
#include "nlsr/groundstate.hpp"
#include "nlsr/spectrum.hpp"

namespace nlsr {

/// Quintic smoothstep cutoff: 1 on [0,1], 0 on [2,inf), C^2 in between.
inline double cutoff_chi(double x) {
  if (x <= 1.0) return 1.0;
  if (x >= 2.0) return 0.0;
  const double t = x - 1.0;
  return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

/// Smooth 0 -> 1 ramp on [0,1].
inline double smooth_ramp(double t) { return 1.0 - cutoff_chi(1.0 + std::clamp(t, 0.0, 1.0)); }

struct DistanceConfig {
  double delta_E = 0.0;       ///< energy-norm smallness scale
  double blend_factor = 2.0;  ///< d-tilde blends d and the H^1 orbit distance over [delta_E, factor*delta_E]
};

struct ModeCoordinates {
  double theta = 0.0;
  RadialField eta;
  double lambda_plus = 0.0;
  double lambda_minus = 0.0;
  double lambda_1 = 0.0;
  double lambda_2 = 0.0;
  double b = 0.0;
  RadialField Gamma;
  double energy_norm = 0.0;
  double C_omega = 0.0;
  double d_omega = 0.0;
  double d_tilde = 0.0;
};

/// Everything the decomposition needs about one ground state, precomputed.
class OrbitFrame {
 public:
  OrbitFrame(const GroundState& gs, const SpectralData& sd)
      : gs_(&gs),
        sd_(&sd),
        ops_(std::make_shared<LinearizedOperators>(gs)),
        U_plus_(sd.U_plus()),
        U_minus_(sd.U_minus()),
        i_phi_(Complex(0.0, 1.0) * gs.profile),
        phi_phiprime_(inner_real(gs.profile, gs.omega_derivative)),
        H_phi_(hamiltonian(gs.profile, gs.params)) {
    if (gs.omega_derivative.empty()) throw Error(ErrorKind::IllConditioned, "ground state lacks Phi'");
  }

  const GroundState& ground_state() const { return *gs_; }
  const SpectralData& spectrum() const { return *sd_; }
  const LinearizedOperators& operators() const { return *ops_; }
  const RadialField& U_plus() const { return U_plus_; }
  const RadialField& U_minus() const { return U_minus_; }
  const RadialField& i_phi() const { return i_phi_; }
  double phi_phiprime() const { return phi_phiprime_; }
  double H_phi() const { return H_phi_; }

 private:
  const GroundState* gs_;
  const SpectralData* sd_;
  std::shared_ptr<LinearizedOperators> ops_;
  RadialField U_plus_;
  RadialField U_minus_;
  RadialField i_phi_;
  double phi_phiprime_;
  double H_phi_;
};

/// Phase theta with Omega(e^{-i theta} psi, Phi') = 0 and (e^{-i theta} psi, Phi') < 0,
/// normalized to (-pi, pi].
inline double gauge_theta(const RadialField& psi, const GroundState& gs) {
  const Complex z = inner(psi, gs.omega_derivative);
  const double scale = norm_L2(psi) * norm_L2(gs.omega_derivative);
  if (!(std::abs(z) >= 1e-12 * scale) || scale == 0.0) {
    throw Error(ErrorKind::DegenerateGauge, "pairing with Phi' vanishes");
  }
  // (e^{-i t} psi, Phi') = e^{-i t} z; with t = arg z + pi it equals -|z|.
  double theta = std::arg(z) + std::numbers::pi;
  if (theta > std::numbers::pi) theta -= 2.0 * std::numbers::pi;
  return theta;
}

/// <L Gamma, Gamma> = <L_+ Re G, Re G> + <L_- Im G, Im G>.
inline double linearized_form(const LinearizedOperators& ops, const RadialField& f) {
  return ops.form_plus(f.real_part()) + ops.form_minus(f.imag_part());
}

/// Symplectic decomposition of psi around the orbit; fills the coordinates
/// but not the distances.
inline ModeCoordinates decompose(const RadialField& psi, const OrbitFrame& frame) {
  const auto& gs = frame.ground_state();
  ModeCoordinates c;
  c.theta = gauge_theta(psi, gs);
  c.eta = std::polar(1.0, -c.theta) * psi;
  c.eta -= gs.profile;
  c.lambda_plus = omega_form(c.eta, frame.U_minus());
  c.lambda_minus = -omega_form(c.eta, frame.U_plus());
  c.b = inner_real(c.eta, gs.profile) / frame.phi_phiprime();
  c.lambda_1 = 0.5 * (c.lambda_plus + c.lambda_minus);
  c.lambda_2 = 0.5 * (c.lambda_plus - c.lambda_minus);
  c.Gamma = c.eta;
  c.Gamma -= c.lambda_plus * frame.U_plus();
  c.Gamma -= c.lambda_minus * frame.U_minus();
  c.Gamma -= c.b * gs.omega_derivative;
  return c;
}

/// Energy norm, C_omega and d_omega for a decomposed state.
inline void distance_d(ModeCoordinates& c, const RadialField& psi, const OrbitFrame& frame,
                       const DistanceConfig& cfg) {
  const double mu = frame.spectrum().mu;
  const double q = linearized_form(frame.operators(), c.Gamma);
  const double scale = std::max(1.0, norm_H1(c.Gamma) * norm_H1(c.Gamma)) * 1e-10;
  if (q < -scale) {
    throw Error(ErrorKind::NegativeQuadraticForm,
                "<L Gamma, Gamma> = " + std::to_string(q) + " is negative");
  }
  const double lp = c.lambda_plus, lm = c.lambda_minus;
  const double e2 = 0.5 * mu * (lp * lp + lm * lm) + 0.5 * std::max(q, 0.0);
  c.energy_norm = std::sqrt(e2);
  const double H = hamiltonian(psi, frame.ground_state().params);
  c.C_omega = H - frame.H_phi() + 0.5 * mu * (lp + lm) * (lp + lm) - e2;
  double d2 = e2;
  if (cfg.delta_E > 0.0) d2 += cutoff_chi(c.energy_norm / (2.0 * cfg.delta_E)) * c.C_omega;
  c.d_omega = std::sqrt(std::max(d2, 0.0));
}

/// inf over theta of ||psi - e^{i theta} Phi||_{H^1}.
inline double dist_H1_orbit(const RadialField& psi, const GroundState& gs) {
  const double a = norm_H1(psi), b = norm_H1(gs.profile);
  const double cross = std::abs(inner_H1(psi, gs.profile));
  return std::sqrt(std::max(a * a + b * b - 2.0 * cross, 0.0));
}

/// d-tilde from d_omega (if available) and the H^1 orbit distance.
inline double blend_dtilde(std::optional<double> d_omega, double dist_h1, const DistanceConfig& cfg) {
  const double far = std::max(cfg.delta_E, dist_h1);
  if (!d_omega) return far;
  const double d = *d_omega;
  if (d <= cfg.delta_E) return d;
  const double span = (cfg.blend_factor - 1.0) * cfg.delta_E;
  const double s = smooth_ramp((d - cfg.delta_E) / span);
  return (1.0 - s) * d + s * far;
}

/// Full coordinates of psi including d_omega and d-tilde. When the gauge is
/// degenerate only d_tilde is meaningful and the result carries no coordinates.
inline ModeCoordinates measure(const RadialField& psi, const OrbitFrame& frame, const DistanceConfig& cfg) {
  const double dh = dist_H1_orbit(psi, frame.ground_state());
  ModeCoordinates c;
  try {
    c = decompose(psi, frame);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::DegenerateGauge) throw;
    c.theta = std::numeric_limits<double>::quiet_NaN();
    c.d_omega = std::numeric_limits<double>::quiet_NaN();
    c.d_tilde = blend_dtilde(std::nullopt, dh, cfg);
    return c;
  }
  distance_d(c, psi, frame, cfg);
  c.d_tilde = blend_dtilde(c.d_omega, dh, cfg);
  return c;
}

inline double distance_dtilde(const RadialField& psi, const OrbitFrame& frame, const DistanceConfig& cfg) {
  return measure(psi, frame, cfg).d_tilde;
}

/// Rescales psi so that M(psi) = m.
inline RadialField onto_mass_sphere(RadialField psi, double m) {
  const double cur = mass(psi);
  if (cur > 0.0) psi *= std::sqrt(m / cur);
  return psi;
}

/// Smooth random complex radial field: a few Gaussian bumps inside the core.
inline RadialField random_smooth_field(const GridPtr& grid, std::mt19937_64& rng, double width_scale) {
  std::uniform_real_distribution<double> U(-1.0, 1.0);
  std::uniform_real_distribution<double> pos(0.0, 2.0 * width_scale);
  std::vector<Complex> v(grid->size());
  for (int k = 0; k < 4; ++k) {
    const Complex a(U(rng), U(rng));
    const double c = pos(rng);
    const double s = width_scale * (0.5 + 0.5 * std::abs(U(rng)));
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double x = (grid->r(i) - c) / s;
      v[i] += a * std::exp(-0.5 * x * x);
    }
  }
  return RadialField::from_complex(grid, std::move(v));
}

/// Removes the discrete-mode, Phi' and i Phi components so the result
/// satisfies the four symplectic orthogonality conditions.
inline RadialField project_to_Gamma(RadialField v, const OrbitFrame& frame) {
  const auto& gs = frame.ground_state();
  const double a = omega_form(v, gs.omega_derivative) / omega_form(frame.i_phi(), gs.omega_derivative);
  v -= a * frame.i_phi();
  const double lp = omega_form(v, frame.U_minus());
  const double lm = -omega_form(v, frame.U_plus());
  const double b = inner_real(v, gs.profile) / frame.phi_phiprime();
  v -= lp * frame.U_plus();
  v -= lm * frame.U_minus();
  v -= b * gs.omega_derivative;
  return v;
}

struct CalibrationSample {
  int direction = 0;
  double energy_norm = 0.0;
  double ratio = 0.0;  ///< |C_omega| / ||eta||_E^2
};

struct Calibration {
  double delta_E = 0.0;
  double target_ratio = 0.05;  ///< |C| <= E^2/10 with margin 2
  std::vector<CalibrationSample> samples;
};

/// Largest delta_E such that every mass-sphere sample with ||eta||_E <= 4 delta_E
/// satisfies |C_omega| <= ||eta||_E^2 / 20. Directions: +-U_+, +-U_-, and
/// `random_directions` smooth fields projected onto the Gamma subspace.
inline Calibration calibrate_delta_E(const OrbitFrame& frame, std::uint64_t seed = 0, int random_directions = 4,
                                     double max_energy = 1.0) {
  const auto& gs = frame.ground_state();
  std::vector<RadialField> dirs = {frame.U_plus(), -1.0 * frame.U_plus(), frame.U_minus(),
                                   -1.0 * frame.U_minus()};
  std::mt19937_64 rng(seed);
  const double width = 1.0 / std::sqrt(gs.omega());
  for (int k = 0; k < random_directions; ++k) {
    dirs.push_back(project_to_Gamma(random_smooth_field(gs.grid_ptr(), rng, width), frame));
  }
  Calibration cal;
  const DistanceConfig raw{};  // no cutoff: C_omega is what is being measured
  double fail_energy = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    auto v = dirs[k];
    v *= 1.0 / norm_H1(v);
    for (int j = 0; j < 40; ++j) {
      const double s = 1e-4 * std::pow(2.0, 0.5 * j);
      auto psi = gs.profile + s * v;
      psi = onto_mass_sphere(std::move(psi), gs.mass_value);
      ModeCoordinates c;
      try {
        c = decompose(psi, frame);
        distance_d(c, psi, frame, raw);
      } catch (const Error&) {
        fail_energy = std::min(fail_energy, c.energy_norm > 0 ? c.energy_norm : s);
        break;
      }
      const double e = c.energy_norm;
      if (!(e > 0.0)) continue;
      const double ratio = std::abs(c.C_omega) / (e * e);
      cal.samples.push_back({static_cast<int>(k), e, ratio});
      if (ratio > cal.target_ratio) {
        fail_energy = std::min(fail_energy, e);
        break;
      }
      if (e > max_energy) break;
    }
  }
  if (!std::isfinite(fail_energy)) fail_energy = max_energy;
  // Every sample below the first failure passes; a sample above it need not.
  double smallest_fail = fail_energy;
  for (const auto& smp : cal.samples) {
    if (smp.ratio > cal.target_ratio) smallest_fail = std::min(smallest_fail, smp.energy_norm);
  }
  cal.delta_E = 0.25 * smallest_fail * (1.0 - 1e-9);
  // Guard against a sample below 4 delta_E that failed on a different direction.
  for (const auto& smp : cal.samples) {
    if (smp.energy_norm <= 4.0 * cal.delta_E && smp.ratio > cal.target_ratio) {
      cal.delta_E = 0.25 * smp.energy_norm * (1.0 - 1e-9);
    }
  }
  if (!(cal.delta_E > 0.0)) throw Error(ErrorKind::NonConvergence, "delta_E calibration found no admissible scale");
  return cal;
}

}  // namespace nlsr
