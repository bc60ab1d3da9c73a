#pragma once

#include <stdexcept>
#include <string>

namespace phi {

/// Argument violates an operation's precondition (overlapping axis sets,
/// mismatched spaces, malformed graphs, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Arithmetic that has no defined value, e.g. conditioning on a zero marginal.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed distribution or graph text.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or rejected experiment configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace phi
