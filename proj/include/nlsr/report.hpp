#pragma once

#include <cmath>

#include "nlsr/classify.hpp"
#include "nlsr/manifest.hpp"
#include "nlsr/spectrum.hpp"

namespace nlsr {

/// JSON numbers cannot hold NaN or infinities; those become null.
inline Json json_number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

inline Json groundstate_json(const GroundState& gs) {
  Json j;
  j["d"] = gs.params.d;
  j["p"] = gs.params.p;
  j["omega"] = gs.params.omega;
  j["n"] = gs.grid().size();
  j["r_max"] = gs.grid().r_max();
  j["action"] = gs.action;
  j["mass"] = gs.mass_value;
  j["phi0"] = gs.central_value;
  j["residual_H1"] = gs.residual_H1;
  j["newton_iterations"] = gs.newton_iterations;
  return j;
}

/// Spectral record; f1 and f2 themselves are stored as snapshots.
inline Json spectrum_json(const SpectralData& sd, double omega) {
  Json j;
  j["omega"] = omega;
  j["nu"] = sd.nu;
  j["mu"] = sd.mu;
  j["iterations"] = sd.iterations;
  j["normalizations"] = {{"two_f1_f2", sd.normalization}, {"f1_f2", sd.f1_f2}, {"phi_f2", sd.phi_f2}};
  j["orthogonality"] = {{"phi_f1", sd.orth_phi_f1}, {"phiprime_f2", sd.orth_phiprime_f2}};
  j["residuals"] = {{"plus", sd.residual_plus}, {"minus", sd.residual_minus}};
  return j;
}

inline Json evidence_json(const DirectionEvidence& ev) {
  Json j;
  j["label"] = to_string(ev.label);
  j["reason"] = ev.reason;
  j["horizon"] = ev.horizon;
  j["status"] = to_string(ev.status);
  j["t_first_exit"] = ev.t_first_exit;
  j["K_sign_changes"] = ev.K_sign_changes;
  j["final_K_sign"] = ev.final_K_sign;
  j["d_tilde_min"] = json_number(ev.d_tilde_min);
  j["d_tilde_max"] = json_number(ev.d_tilde_max);
  j["lp1_peak"] = json_number(ev.lp1_peak);
  j["lp1_final"] = json_number(ev.lp1_final);
  return j;
}

inline Json classification_json(const Classification& c, const std::string& init_spec) {
  Json j;
  j["init_spec"] = init_spec;
  j["forward"] = to_string(c.forward);
  j["backward"] = to_string(c.backward);
  j["scenario"] = c.scenario ? Json(*c.scenario) : Json(nullptr);
  j["scenario_name"] = scenario_name(c.scenario);
  j["admissible"] = c.admissible;
  j["refusal"] = c.refusal;
  j["backward_by_symmetry"] = c.backward_by_symmetry;
  j["S_omega"] = json_number(c.S_omega);
  j["mass"] = json_number(c.mass);
  j["epsilon_omega"] = json_number(c.epsilon_omega);
  j["alpha"] = json_number(c.alpha);
  j["mu"] = json_number(c.mu);
  j["delta_E"] = json_number(c.delta_E);
  j["delta_star"] = json_number(c.delta_star);
  j["forward_evidence"] = evidence_json(c.fwd);
  if (!c.backward_by_symmetry && c.admissible) j["backward_evidence"] = evidence_json(c.bwd);
  return j;
}

}  // namespace nlsr
