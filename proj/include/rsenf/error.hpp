#pragma once

#include <stdexcept>
#include <string>

namespace rsenf {

enum class ErrorCode {
  invalid_argument,  // precondition on an input value
  degenerate,        // input is valid but admits no answer (e.g. empty candidate set)
  inapplicable,      // method cannot operate on this configuration
  unreliable,        // estimate failed a quality gate
  format,            // malformed file or record
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool condition, const std::string& what) {
  if (!condition) fail(ErrorCode::invalid_argument, what);
}

}  // namespace rsenf
