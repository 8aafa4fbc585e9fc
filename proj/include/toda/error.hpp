#pragma once

#include <stdexcept>
#include <string>

namespace toda {

enum class ErrorCode {
  InvalidInput,
  Config,
  NonConvergence,
  InvariantViolation,
  Internal,
};

/// Error carrying a category so drivers can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, const std::string& what) {
  if (!cond) fail(ErrorCode::InvalidInput, what);
}

}  // namespace toda
