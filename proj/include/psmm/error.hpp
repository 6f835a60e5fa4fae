#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace psmm {

enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  SampleTooSmall,
  SingularCovariance,
  NotConverged,
  InfeasibleLabels,
  DegenerateDirection,
  TooFewSlices,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// True for failures of the numerics on otherwise valid input.
bool is_numerical(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool condition, const std::string& what,
                    ErrorKind kind = ErrorKind::InvalidArgument) {
  if (!condition) fail(kind, what);
}

}  // namespace psmm
