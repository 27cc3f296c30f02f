#include "cmabgfn/errors.hpp"

namespace cmabgfn {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kEmptyActionSet: return "EmptyActionSet";
    case ErrorKind::kInvalidAction: return "InvalidAction";
    case ErrorKind::kIncompleteState: return "IncompleteState";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kEmptyGraph: return "EmptyGraph";
    case ErrorKind::kEnvMismatch: return "EnvMismatch";
    case ErrorKind::kAllMasked: return "AllMasked";
    case ErrorKind::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::kNonPositiveReward: return "NonPositiveReward";
    case ErrorKind::kOutOfRange: return "OutOfRange";
    case ErrorKind::kColdArm: return "ColdArm";
    case ErrorKind::kKTooLarge: return "KTooLarge";
    case ErrorKind::kWarmupStall: return "WarmupStall";
    case ErrorKind::kTooFew: return "TooFew";
    case ErrorKind::kTooLarge: return "TooLarge";
    case ErrorKind::kPrecondition: return "Precondition";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace cmabgfn
