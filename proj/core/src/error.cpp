#include "nelson/error.hpp"

namespace nelson {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_argument: return "InvalidArgument";
    case ErrorCode::grid_mismatch: return "GridMismatch";
    case ErrorCode::zero_mass: return "ZeroMass";
    case ErrorCode::non_finite_state: return "NonFiniteState";
    case ErrorCode::out_of_range: return "OutOfRange";
    case ErrorCode::too_few_samples: return "TooFewSamples";
    case ErrorCode::no_fringes: return "NoFringes";
    case ErrorCode::missing_field: return "MissingField";
    case ErrorCode::mask_too_large: return "MaskTooLarge";
    case ErrorCode::interpolation_out_of_range: return "InterpolationOutOfRange";
    case ErrorCode::io: return "IoError";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

}  // namespace nelson
