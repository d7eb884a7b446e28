#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace asymloss {

enum class ErrorKind {
  config,         // bad parameters or configuration
  invalid_input,  // data violates an operation precondition
  numeric,        // non-finite or singular computation
  unsatisfiable,  // a closed-form condition can never hold (e.g. q > 1 with a = 1)
  dominance,      // noise is not clean-label-dominant
  unsupported,    // operation not defined for this variant
  io,
  format,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }
  // Message without the kind prefix that what() carries.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorKind kind_;
  std::string message_;
};

// Process exit code for the CLI: 1 configuration, 2 runtime/numeric, 3 I/O.
int exit_code_for(ErrorKind kind);

[[noreturn]] void raise(ErrorKind kind, const std::string& message);

}  // namespace asymloss
