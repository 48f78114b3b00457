#pragma once

#include <stdexcept>
#include <string>

namespace ila {

enum class ErrorCode {
  kInvalidInput = 1,
  kConfig = 2,
  kRuntime = 3,
  kInfeasible = 4,
  kDegenerate = 5,
  kBehindCamera = 6,
  kEstimationFailure = 7,
  kTooLarge = 8,
};

/// Base exception for every failure raised by the library. The code maps
/// one-to-one onto the C API status values.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline void require(bool cond, const std::string& what, ErrorCode code = ErrorCode::kInvalidInput) {
  if (!cond) throw Error(code, what);
}

}  // namespace ila
