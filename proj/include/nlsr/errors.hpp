#pragma once

#include <stdexcept>
#include <string>

namespace nlsr {

/// Failure kinds raised by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
  GridMismatch,
  Domain,
  NonConvergence,
  GridTooCoarse,
  SingularOperator,
  PositiveInfimum,
  IllConditioned,
  DegenerateGauge,
  NegativeQuadraticForm,
  NonFinite,
  OutOfRange,
  Inconsistent,
  Parse,
  Format,
  Version,
  NonFiniteData,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::GridMismatch: return "GridMismatch";
    case ErrorKind::Domain: return "DomainError";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::SingularOperator: return "SingularOperator";
    case ErrorKind::PositiveInfimum: return "PositiveInfimum";
    case ErrorKind::IllConditioned: return "IllConditioned";
    case ErrorKind::DegenerateGauge: return "DegenerateGauge";
    case ErrorKind::NegativeQuadraticForm: return "NegativeQuadraticForm";
    case ErrorKind::NonFinite: return "NonFinite";
    case ErrorKind::OutOfRange: return "OutOfRange";
    case ErrorKind::Inconsistent: return "Inconsistent";
    case ErrorKind::Parse: return "ParseError";
    case ErrorKind::Format: return "FormatError";
    case ErrorKind::Version: return "VersionError";
    case ErrorKind::NonFiniteData: return "NonFiniteData";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

  /// Configuration-side failures (exit code 2) as opposed to numerical ones (3).
  bool is_config_error() const noexcept {
    return kind_ == ErrorKind::Parse || kind_ == ErrorKind::Domain ||
           kind_ == ErrorKind::Format || kind_ == ErrorKind::Version ||
           kind_ == ErrorKind::NonFiniteData;
  }

 private:
  ErrorKind kind_;
};

}  // namespace nlsr
