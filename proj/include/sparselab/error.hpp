#pragma once

#include <stdexcept>
#include <string>

namespace sparselab {

enum class ErrorCode {
  invalid_argument = 1,
  stale_generation = 2,
  precondition = 3,
  packing_violation = 4,
  parse = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace sparselab
