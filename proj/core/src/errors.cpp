#include "brakeorbit/errors.hpp"

namespace brakeorbit {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::domain: return "domain error";
    case ErrorCode::projection: return "projection error";
    case ErrorCode::escape: return "escape error";
    case ErrorCode::stiffness: return "stiffness error";
    case ErrorCode::no_brake: return "no-brake error";
    case ErrorCode::degenerate_curve: return "degenerate-curve error";
    case ErrorCode::invalid_geodesic: return "invalid-geodesic error";
    case ErrorCode::handoff: return "handoff error";
    case ErrorCode::sampling: return "sampling error";
    case ErrorCode::stall: return "stall error";
    case ErrorCode::miss: return "miss error";
    case ErrorCode::quadrature: return "quadrature error";
    case ErrorCode::interpolation: return "interpolation error";
    case ErrorCode::refused_mesh: return "refused mesh";
    case ErrorCode::singular_solve: return "singular boundary-value solve";
    case ErrorCode::invalid_input: return "invalid input";
  }
  return "unknown error";
}

}  // namespace brakeorbit
