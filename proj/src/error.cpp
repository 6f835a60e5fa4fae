#include "psmm/error.hpp"

namespace psmm {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SampleTooSmall: return "SampleTooSmall";
    case ErrorKind::SingularCovariance: return "SingularCovariance";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::InfeasibleLabels: return "InfeasibleLabels";
    case ErrorKind::DegenerateDirection: return "DegenerateDirection";
    case ErrorKind::TooFewSlices: return "TooFewSlices";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

bool is_numerical(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::SingularCovariance:
    case ErrorKind::NotConverged:
    case ErrorKind::InfeasibleLabels:
    case ErrorKind::DegenerateDirection:
      return true;
    default:
      return false;
  }
}

}  // namespace psmm
