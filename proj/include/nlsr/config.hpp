#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nlsr/errors.hpp"
#include "nlsr/params.hpp"

namespace nlsr {

/// Fully resolved run parameters. Every key of the text format maps to one field.
struct RunConfig {
  // model
  int d = 4;
  double p = 2.5;
  double omega = 0.05;
  // grid
  std::size_t n = 8192;
  double r_max = 40.0;
  // evolution
  double dt = 1e-3;
  double t_max = 1.0;
  int stride = 10;
  int order = 2;
  double max_phase = 0.1;
  double dt_floor = 1e-10;
  double grad_ratio_max = 1e3;
  double resolve_cells = 10.0;
  // m-curve
  double omega_min = 0.01;
  double omega_max = 0.2;
  int samples = 12;
  // classification
  double classify_dt = 2e-3;
  int classify_order = 4;
  double horizon = 6.0;
  double horizon_max = 48.0;
  double sample_interval = 0.05;
  double absorb_width = 0.25;
  double absorb_strength = 1.0;
  double delta_star_ratio = 0.25;
  double decay_factor = 4.0;
  double eps_rel = 0.01;
  bool strict = false;
  // inputs
  std::vector<std::string> init;
  std::uint64_t seed = 0;

  ModelParams model() const { return ModelParams{d, p, omega}; }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& v, int line, const std::string& key) {
  T out{};
  const char* first = v.data();
  const char* last = v.data() + v.size();
  if (!v.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": cannot parse value '" + v + "' for key '" + key + "'");
  }
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(out)) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": non-finite value for key '" + key + "'");
    }
  }
  return out;
}

inline bool parse_bool(const std::string& v, int line, const std::string& key) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": expected boolean for key '" + key + "', got '" + v + "'");
}

/// Shortest text that reads back to the same double.
inline std::string format_double(double x) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses `key = value` lines (`#` starts a comment) and resolves defaults.
///
/// Unless set explicitly, r_max is raised to 12/sqrt(omega) and n grows with
/// it so the default spacing is kept. `init` may repeat; any other key may not.
inline RunConfig parse_config(const std::string& text) {
  RunConfig c;
  bool n_set = false, rmax_set = false;
  std::map<std::string, int> seen;
  std::istringstream in(text);
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (const auto hash = raw.find('#'); hash != std::string::npos) raw.erase(hash);
    const std::string s = detail::trim(raw);
    if (s.empty()) continue;
    const auto eq = s.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(s.substr(0, eq));
    const std::string val = detail::trim(s.substr(eq + 1));
    if (key.empty()) throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": empty key");
    if (val.empty()) throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": empty value for '" + key + "'");
    if (key != "init") {
      if (auto it = seen.find(key); it != seen.end()) {
        throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": duplicate key '" + key +
                                          "' (first set on line " + std::to_string(it->second) + ")");
      }
      seen[key] = line;
    }

    auto dbl = [&] { return detail::parse_number<double>(val, line, key); };
    auto integer = [&] { return detail::parse_number<int>(val, line, key); };

    if (key == "d") c.d = integer();
    else if (key == "p") c.p = dbl();
    else if (key == "omega") c.omega = dbl();
    else if (key == "n") { c.n = detail::parse_number<std::size_t>(val, line, key); n_set = true; }
    else if (key == "r_max") { c.r_max = dbl(); rmax_set = true; }
    else if (key == "dt") c.dt = dbl();
    else if (key == "t_max") c.t_max = dbl();
    else if (key == "stride") c.stride = integer();
    else if (key == "order") c.order = integer();
    else if (key == "max_phase") c.max_phase = dbl();
    else if (key == "dt_floor") c.dt_floor = dbl();
    else if (key == "grad_ratio_max") c.grad_ratio_max = dbl();
    else if (key == "resolve_cells") c.resolve_cells = dbl();
    else if (key == "omega_min") c.omega_min = dbl();
    else if (key == "omega_max") c.omega_max = dbl();
    else if (key == "samples") c.samples = integer();
    else if (key == "classify_dt") c.classify_dt = dbl();
    else if (key == "classify_order") c.classify_order = integer();
    else if (key == "horizon") c.horizon = dbl();
    else if (key == "horizon_max") c.horizon_max = dbl();
    else if (key == "sample_interval") c.sample_interval = dbl();
    else if (key == "absorb_width") c.absorb_width = dbl();
    else if (key == "absorb_strength") c.absorb_strength = dbl();
    else if (key == "delta_star_ratio") c.delta_star_ratio = dbl();
    else if (key == "decay_factor") c.decay_factor = dbl();
    else if (key == "eps_rel") c.eps_rel = dbl();
    else if (key == "strict") c.strict = detail::parse_bool(val, line, key);
    else if (key == "seed") c.seed = detail::parse_number<std::uint64_t>(val, line, key);
    else if (key == "init") c.init.push_back(val);
    else throw Error(ErrorKind::Parse, "line " + std::to_string(line) + ": unknown key '" + key + "'");
  }

  c.model().validate();
  if (c.n < 4) throw Error(ErrorKind::Domain, "n must be at least 4");
  if (!(c.r_max > 0.0)) throw Error(ErrorKind::Domain, "r_max must be positive");
  if (!(c.dt > 0.0) || !(c.t_max > 0.0) || c.stride < 1) throw Error(ErrorKind::Domain, "dt, t_max and stride must be positive");
  if ((c.order != 2 && c.order != 4) || (c.classify_order != 2 && c.classify_order != 4)) {
    throw Error(ErrorKind::Domain, "order must be 2 or 4");
  }
  if (!(c.omega_min > 0.0) || !(c.omega_max > c.omega_min) || c.samples < 2) {
    throw Error(ErrorKind::Domain, "m-curve range needs 0 < omega_min < omega_max and samples >= 2");
  }
  if (!(c.horizon > 0.0) || c.horizon_max < c.horizon || !(c.sample_interval > 0.0) || !(c.classify_dt > 0.0)) {
    throw Error(ErrorKind::Domain, "invalid classification horizon settings");
  }
  if (c.absorb_width < 0.0 || c.absorb_width >= 1.0 || !(c.eps_rel > 0.0) || !(c.delta_star_ratio > 0.0) ||
      !(c.decay_factor > 1.0)) {
    throw Error(ErrorKind::Domain, "invalid classification thresholds");
  }

  const double decay_rmax = 12.0 / std::sqrt(c.omega);
  if (!rmax_set && c.r_max < decay_rmax) {
    const double h = c.r_max / static_cast<double>(c.n);
    c.r_max = decay_rmax;
    if (!n_set) c.n = static_cast<std::size_t>(std::ceil(c.r_max / h));
  }
  return c;
}

/// Canonical text form; parse_config(to_config_text(c)) resolves to c.
inline std::string to_config_text(const RunConfig& c) {
  std::ostringstream os;
  auto kv = [&](const char* k, const std::string& v) { os << k << " = " << v << '\n'; };
  auto f = detail::format_double;
  kv("d", std::to_string(c.d));
  kv("p", f(c.p));
  kv("omega", f(c.omega));
  kv("n", std::to_string(c.n));
  kv("r_max", f(c.r_max));
  kv("dt", f(c.dt));
  kv("t_max", f(c.t_max));
  kv("stride", std::to_string(c.stride));
  kv("order", std::to_string(c.order));
  kv("max_phase", f(c.max_phase));
  kv("dt_floor", f(c.dt_floor));
  kv("grad_ratio_max", f(c.grad_ratio_max));
  kv("resolve_cells", f(c.resolve_cells));
  kv("omega_min", f(c.omega_min));
  kv("omega_max", f(c.omega_max));
  kv("samples", std::to_string(c.samples));
  kv("classify_dt", f(c.classify_dt));
  kv("classify_order", std::to_string(c.classify_order));
  kv("horizon", f(c.horizon));
  kv("horizon_max", f(c.horizon_max));
  kv("sample_interval", f(c.sample_interval));
  kv("absorb_width", f(c.absorb_width));
  kv("absorb_strength", f(c.absorb_strength));
  kv("delta_star_ratio", f(c.delta_star_ratio));
  kv("decay_factor", f(c.decay_factor));
  kv("eps_rel", f(c.eps_rel));
  kv("strict", c.strict ? "true" : "false");
  kv("seed", std::to_string(c.seed));
  for (const auto& s : c.init) kv("init", s);
  return os.str();
}

/// Replaces or appends `key = value` lines. Lines for overridden keys are
/// dropped from `base` so the duplicate-key rule still holds.
inline std::string override_config_text(const std::string& base,
                                        const std::vector<std::pair<std::string, std::string>>& overrides) {
  std::ostringstream out;
  std::istringstream in(base);
  std::string raw;
  while (std::getline(in, raw)) {
    std::string s = raw;
    if (const auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
    const auto eq = s.find('=');
    const std::string key = eq == std::string::npos ? std::string() : detail::trim(s.substr(0, eq));
    bool dropped = false;
    for (const auto& [k, v] : overrides) dropped = dropped || k == key;
    // Keep the line count stable so parse errors still point at the right line.
    out << (dropped ? std::string() : raw) << '\n';
  }
  for (const auto& [k, v] : overrides) out << k << " = " << v << '\n';
  return out.str();
}

}  // namespace nlsr
