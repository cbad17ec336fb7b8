#pragma once

#include <stdexcept>
#include <string>

namespace pooled {

enum class ErrorCode {
  InvalidConfig,
  InvalidInput,
  EmptyGraph,
  Resource,
  Divergence,
  WindowUndefined,
  Io,
  NotTerminated,
};

// Every failure inside the core is reported through this type; the C API
// maps the code onto a pooled_status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace pooled
