#pragma once

#include <stdexcept>
#include <string>

namespace brakeorbit {

enum class ErrorCode {
  domain,
  projection,
  escape,
  stiffness,
  no_brake,
  degenerate_curve,
  invalid_geodesic,
  handoff,
  sampling,
  stall,
  miss,
  quadrature,
  interpolation,
  refused_mesh,
  singular_solve,
  invalid_input,
};

const char* to_string(ErrorCode code);

// Numerical failure raised by the library. The CLI maps it to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// Malformed input that a caller could have avoided (bad spec, unknown name).
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace brakeorbit
