#include "pa/error.hpp"

namespace pa {

const char* error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Ok: return "Ok";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NotUnimodular: return "NotUnimodular";
    case ErrorCode::TopEigenvalueNotSimple: return "TopEigenvalueNotSimple";
    case ErrorCode::NotHyperbolic: return "NotHyperbolic";
    case ErrorCode::PerturbationTooLarge: return "PerturbationTooLarge";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::ResolutionInsufficient: return "ResolutionInsufficient";
    case ErrorCode::TieBreakUndefined: return "TieBreakUndefined";
    case ErrorCode::WrongSide: return "WrongSide";
    case ErrorCode::LoopNotClosed: return "LoopNotClosed";
    case ErrorCode::NotPrimitive: return "NotPrimitive";
    case ErrorCode::PerronRootNotSimple: return "PerronRootNotSimple";
    case ErrorCode::HitSingularity: return "HitSingularity";
    case ErrorCode::DegenerateWindow: return "DegenerateWindow";
    case ErrorCode::ExponentCollision: return "ExponentCollision";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
    case ErrorCode::PresetMissing: return "PresetMissing";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::Internal: return "Internal";
  }
  return "Unknown";
}

}  // namespace pa
