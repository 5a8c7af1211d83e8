#pragma once

#include <stdexcept>
#include <string>

namespace pa {

// Numeric values are part of the C API (see pa/c_api.h) and must not change.
enum class ErrorCode : int {
  Ok = 0,
  InvalidArgument = 1,
  NotUnimodular = 2,
  TopEigenvalueNotSimple = 3,
  NotHyperbolic = 4,
  PerturbationTooLarge = 5,
  NoConvergence = 6,
  ResolutionInsufficient = 7,
  TieBreakUndefined = 8,
  WrongSide = 9,
  LoopNotClosed = 10,
  NotPrimitive = 11,
  PerronRootNotSimple = 12,
  HitSingularity = 13,
  DegenerateWindow = 14,
  ExponentCollision = 15,
  ConfigInvalid = 16,
  PresetMissing = 17,
  InvariantViolation = 18,
  Internal = 99,
};

const char* error_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(error_name(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace pa
