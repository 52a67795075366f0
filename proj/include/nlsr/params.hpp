#pragma once

#include <cmath>
#include <sstream>

#include "nlsr/errors.hpp"

namespace nlsr {

/// Model parameters of the combined-power equation
///   i psi_t + Lap psi + |psi|^{p-1} psi + |psi|^{4/(d-2)} psi = 0
/// together with the standing-wave frequency omega.
struct ModelParams {
  int d = 4;
  double p = 2.5;
  double omega = 0.05;

  /// Lower exponent 2_* = 2 + 4/d.
  double lower_exponent() const { return 2.0 + 4.0 / d; }
  /// Energy-critical exponent 2^* = 2 + 4/(d-2).
  double critical_exponent() const { return 2.0 + 4.0 / (d - 2); }
  /// Power of |u| in the critical nonlinearity, 4/(d-2).
  double critical_power() const { return 4.0 / (d - 2); }
  /// Scaling exponent s_p = d/2 - 2/(p-1).
  double s_p() const { return d / 2.0 - 2.0 / (p - 1.0); }

  /// Throws Domain unless d >= 3 and 2_* < p+1 < 2^*.
  void validate(bool require_omega = true) const {
    if (d < 3) {
      throw Error(ErrorKind::Domain, "dimension d must be >= 3, got " + std::to_string(d));
    }
    if (!(p + 1.0 > lower_exponent() && p + 1.0 < critical_exponent())) {
      std::ostringstream os;
      os << "p+1 = " << p + 1.0 << " must lie strictly between 2_* = " << lower_exponent()
         << " and 2^* = " << critical_exponent() << " for d = " << d;
      throw Error(ErrorKind::Domain, os.str());
    }
    if (require_omega && !(omega > 0.0)) {
      throw Error(ErrorKind::Domain, "omega must be positive");
    }
  }

  ModelParams with_omega(double w) const {
    ModelParams q = *this;
    q.omega = w;
    return q;
  }
};

}  // namespace nlsr
