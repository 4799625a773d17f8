#pragma once

#include <stdexcept>
#include <string>

namespace picard {

/// Machine-readable error categories. The CLI maps these onto exit codes.
enum class ErrorCode {
  syntax,
  unknown_identifier,
  order_limit,
  unbound_variable,
  domain,
  invalid_argument,
  grid_mismatch,
  resolution,
  config,
  io,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::syntax: return "syntax";
    case ErrorCode::unknown_identifier: return "unknown_identifier";
    case ErrorCode::order_limit: return "order_limit";
    case ErrorCode::unbound_variable: return "unbound_variable";
    case ErrorCode::domain: return "domain";
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::grid_mismatch: return "grid_mismatch";
    case ErrorCode::resolution: return "resolution";
    case ErrorCode::config: return "config";
    case ErrorCode::io: return "io";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Parse failure; `position` is a byte offset into the source text.
class ParseError : public Error {
 public:
  ParseError(ErrorCode code, std::size_t position, const std::string& message)
      : Error(code, message + " at position " + std::to_string(position)),
        position_(position) {}

  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

/// Raised while evaluating an expression (unbound name, domain violation,
/// non-finite result).
class EvalError : public Error {
 public:
  using Error::Error;
};

}  // namespace picard
