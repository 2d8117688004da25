#pragma once

#include <stdexcept>
#include <string>

namespace rfed {

enum class ErrorCode {
  InvalidInput,
  Shape,
  DegenerateGeometry,
  OutOfInjectivity,
  NonConvergence,
  Io,
  Parse,
  Config,
};

const char* to_string(ErrorCode code) noexcept;

// All library failures surface as this exception; the C API maps `code()` to a status value.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rfed
