#pragma once

#include <stdexcept>
#include <string>

namespace akgrank {

enum class ErrorKind {
  invalid_argument,
  domain,
  numerical,
  exhausted,
  constraint,
  unavailable,
  io,
  parse,
  refused,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Config or argument combination that can never be valid.
struct InvalidArgument : Error {
  explicit InvalidArgument(const std::string& w) : Error(ErrorKind::invalid_argument, w) {}
};

struct DomainError : Error {
  explicit DomainError(const std::string& w) : Error(ErrorKind::domain, w) {}
};

// Moment-matching produced a non-finite or non-positive parameter.
struct DegeneracyError : Error {
  explicit DegeneracyError(const std::string& w) : Error(ErrorKind::numerical, w) {}
};

struct ExhaustedError : Error {
  explicit ExhaustedError(const std::string& w) : Error(ErrorKind::exhausted, w) {}
};

struct ConstraintError : Error {
  explicit ConstraintError(const std::string& w) : Error(ErrorKind::constraint, w) {}
};

struct UnavailableError : Error {
  explicit UnavailableError(const std::string& w) : Error(ErrorKind::unavailable, w) {}
};

struct IoError : Error {
  explicit IoError(const std::string& w) : Error(ErrorKind::io, w) {}
};

struct ParseError : Error {
  explicit ParseError(const std::string& w) : Error(ErrorKind::parse, w) {}
};

struct RefusedError : Error {
  explicit RefusedError(const std::string& w) : Error(ErrorKind::refused, w) {}
};

}  // namespace akgrank
