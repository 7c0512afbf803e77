#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace wsp {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A caller broke a documented precondition (plan domain mismatch, wrong
/// constraint type for an operation, ...).
class ContractViolation : public Error {
 public:
  using Error::Error;
};

/// Schema or document content violates a structural invariant (cyclic step
/// graph, step without an authorized user, scope outside the step set, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An enumeration would exceed a configured cap.
class ResourceLimitError : public Error {
 public:
  using Error::Error;
};

/// A relation kind outside what the operation supports.
class UnsupportedRelationError : public Error {
 public:
  using Error::Error;
};

/// Parse failure with 1-based source position.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::size_t column, const std::string& message)
      : Error("parse error at " + std::to_string(line) + ":" +
              std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace wsp
