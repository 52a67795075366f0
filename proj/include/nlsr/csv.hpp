#pragma once

#include <cmath>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "nlsr/classify.hpp"
#include "nlsr/config.hpp"
#include "nlsr/evolve.hpp"
#include "nlsr/groundstate.hpp"

namespace nlsr::csv {

inline constexpr const char* kMCurveHeader = "omega,m,mass,phi0,residual";
inline constexpr const char* kTrajectoryHeader =
    "t,mass,hamiltonian,K,grad_norm,second_moment,d_omega,d_tilde,lambda_plus,lambda_minus,theta";
inline constexpr const char* kSweepHeader = "init_spec,forward,backward,scenario,S_omega,mass,epsilon_omega";

/// Shortest round-trip number; NaN is written as an empty cell.
inline std::string num(double x) { return std::isnan(x) ? std::string() : detail::format_double(x); }

/// Quotes a cell when it contains a separator, quote or newline.
inline std::string cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string mcurve(const std::vector<MCurveSample>& samples) {
  std::ostringstream os;
  os << kMCurveHeader << '\n';
  for (const auto& s : samples) {
    os << num(s.omega) << ',' << num(s.m) << ',' << num(s.mass) << ',' << num(s.phi0) << ',' << num(s.residual) << '\n';
  }
  return os.str();
}

inline std::string trajectory(const std::vector<TrajectoryRow>& rows) {
  std::ostringstream os;
  os << kTrajectoryHeader << '\n';
  for (const auto& r : rows) {
    os << num(r.t) << ',' << num(r.mass) << ',' << num(r.hamiltonian) << ',' << num(r.K) << ',' << num(r.grad_norm)
       << ',' << num(r.second_moment) << ',' << num(r.d_omega) << ',' << num(r.d_tilde) << ','
       << num(r.lambda_plus) << ',' << num(r.lambda_minus) << ',' << num(r.theta) << '\n';
  }
  return os.str();
}

struct SweepRow {
  std::string init_spec;
  Classification result;
};

inline std::string sweep_index(const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  os << kSweepHeader << '\n';
  for (const auto& r : rows) {
    const auto& c = r.result;
    os << cell(r.init_spec) << ',' << to_string(c.forward) << ',' << to_string(c.backward) << ','
       << (c.scenario ? std::to_string(*c.scenario) : std::string()) << ',' << num(c.S_omega) << ',' << num(c.mass)
       << ',' << num(c.epsilon_omega) << '\n';
  }
  return os.str();
}

/// Splits CSV text into rows of cells; handles quoted cells.
inline std::vector<std::vector<std::string>> parse(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cur;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = true;
      any = true;
    } else if (c == ',') {
      row.push_back(std::move(cur));
      cur.clear();
      any = true;
    } else if (c == '\n') {
      row.push_back(std::move(cur));
      rows.push_back(std::move(row));
      row.clear();
      cur.clear();
      any = false;
    } else if (c != '\r') {
      cur += c;
      any = true;
    }
  }
  if (any) {
    row.push_back(std::move(cur));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace nlsr::csv
