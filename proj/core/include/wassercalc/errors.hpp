#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace wassercalc {

// Base error carrying a stable machine-readable code. The CLI maps
// ValidationError to exit 2 and SolverError to exit 3.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

}  // namespace wassercalc
