#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace sisrd {

/// Root of the library's exception hierarchy.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid user input: bad formula, malformed scenario, violated precondition
/// on parameters. The CLI maps these to exit code 2.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (non-convergence, step underflow, ...).
/// The CLI maps these to exit code 1.
class ComputeError : public Error {
 public:
  using Error::Error;
};

/// Fields or operators built on different discrete domains were combined.
class DomainMismatch : public Error {
 public:
  DomainMismatch() : Error("fields live on different discrete domains") {}
};

/// Formula text could not be parsed.
class ParseError : public ConfigError {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : ConfigError(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Formula evaluation left the real domain (sqrt of a negative, division by
/// zero, fractional power of a negative base, overflow).
class EvalError : public Error {
 public:
  EvalError(const std::string& what, std::string subexpr)
      : Error(what + " in '" + subexpr + "'"), subexpr_(std::move(subexpr)) {}
  const std::string& subexpression() const noexcept { return subexpr_; }

 private:
  std::string subexpr_;
};

}  // namespace sisrd
