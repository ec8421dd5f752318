#pragma once

#include <stdexcept>
#include <string>

namespace nelson {

enum class ErrorCode {
  invalid_argument,
  grid_mismatch,
  zero_mass,
  non_finite_state,
  out_of_range,
  too_few_samples,
  no_fringes,
  missing_field,
  mask_too_large,
  interpolation_out_of_range,
  io,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception carrying a machine-readable code alongside the message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace nelson
