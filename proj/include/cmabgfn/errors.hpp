#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cmabgfn {

enum class ErrorKind {
  kEmptyActionSet,
  kInvalidAction,
  kIncompleteState,
  kLengthMismatch,
  kEmptyGraph,
  kEnvMismatch,
  kAllMasked,
  kNonFiniteGradient,
  kNonPositiveReward,
  kOutOfRange,
  kColdArm,
  kKTooLarge,
  kWarmupStall,
  kTooFew,
  kTooLarge,
  kPrecondition,
  kConfig,
  kIo,
};

std::string_view error_kind_name(ErrorKind kind);

// Every failure raised by the library carries a kind so the CLI can report it
// as machine-readable JSON.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

inline void require(bool cond, ErrorKind kind, const std::string& message) {
  if (!cond) fail(kind, message);
}

}  // namespace cmabgfn
