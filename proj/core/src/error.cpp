#include "asymloss/error.hpp"

namespace asymloss {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "configuration error";
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::unsatisfiable: return "unsatisfiable";
    case ErrorKind::dominance: return "dominance violation";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::io: return "I/O error";
    case ErrorKind::format: return "format error";
  }
  return "error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind), message_(message) {}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::unsatisfiable:
    case ErrorKind::dominance:
    case ErrorKind::unsupported:
      return 1;
    case ErrorKind::invalid_input:
    case ErrorKind::numeric:
      return 2;
    case ErrorKind::io:
    case ErrorKind::format:
      return 3;
  }
  return 2;
}

void raise(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace asymloss
