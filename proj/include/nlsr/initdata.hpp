#pragma once

#include <cmath>
#include <string>

#include "nlsr/config.hpp"
#include "nlsr/groundstate.hpp"
#include "nlsr/snapshot.hpp"
#include "nlsr/spectrum.hpp"

namespace nlsr {

/// Initial-data recipes accepted by the CLI:
///   phi-scaled:L        L * Phi_omega
///   phi-plus-mode:E     Phi_omega + E * U_+
///   gaussian:A,S        A exp(-r^2 / (2 S^2))
///   file:PATH           a stored snapshot
struct InitSpec {
  enum class Kind { PhiScaled, PhiPlusMode, Gaussian, File };
  Kind kind = Kind::PhiScaled;
  double a = 1.0;
  double b = 0.0;
  std::string path;
  std::string text;
};

inline InitSpec parse_init_spec(const std::string& spec) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos) throw Error(ErrorKind::Parse, "init spec '" + spec + "' needs 'kind:args'");
  const std::string kind = detail::trim(spec.substr(0, colon));
  const std::string args = detail::trim(spec.substr(colon + 1));
  InitSpec s;
  s.text = spec;
  auto number = [&](const std::string& v) { return detail::parse_number<double>(detail::trim(v), 0, "init"); };
  try {
    if (kind == "phi-scaled") {
      s.kind = InitSpec::Kind::PhiScaled;
      s.a = number(args);
    } else if (kind == "phi-plus-mode") {
      s.kind = InitSpec::Kind::PhiPlusMode;
      s.a = number(args);
    } else if (kind == "gaussian") {
      const auto comma = args.find(',');
      if (comma == std::string::npos) throw Error(ErrorKind::Parse, "gaussian needs 'A,S'");
      s.kind = InitSpec::Kind::Gaussian;
      s.a = number(args.substr(0, comma));
      s.b = number(args.substr(comma + 1));
      if (!(s.b > 0.0)) throw Error(ErrorKind::Domain, "gaussian width must be positive");
    } else if (kind == "file") {
      if (args.empty()) throw Error(ErrorKind::Parse, "file spec needs a path");
      s.kind = InitSpec::Kind::File;
      s.path = args;
    } else {
      throw Error(ErrorKind::Parse, "unknown init kind '" + kind + "'");
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Parse) throw Error(ErrorKind::Parse, "init spec '" + spec + "': " + e.what());
    throw;
  }
  return s;
}

/// Builds the initial field on `grid`. Snapshot files keep their own grid but
/// must match the dimension.
inline RadialField make_initial(const InitSpec& s, const GridPtr& grid, const ModelParams& mp) {
  switch (s.kind) {
    case InitSpec::Kind::PhiScaled: {
      const auto gs = solve_stationary(mp, grid, StationaryProblem::Combined);
      return s.a * gs.profile;
    }
    case InitSpec::Kind::PhiPlusMode: {
      const auto gs = solve_phi(mp, grid);
      const LinearizedOperators ops(gs);
      const auto sd = solve_mu(ops, gs);
      return gs.profile + s.a * sd.U_plus();
    }
    case InitSpec::Kind::Gaussian: {
      const double a = s.a, sig = s.b;
      return RadialField::from_function(grid, [&](double r) { return a * std::exp(-r * r / (2.0 * sig * sig)); });
    }
    case InitSpec::Kind::File: {
      auto f = read_snapshot(s.path);
      if (f.grid().dimension() != mp.d) {
        throw Error(ErrorKind::GridMismatch, "snapshot dimension " + std::to_string(f.grid().dimension()) +
                                                 " differs from d = " + std::to_string(mp.d));
      }
      return f;
    }
  }
  throw Error(ErrorKind::Parse, "unhandled init kind");
}

}  // namespace nlsr
