#pragma once

#include <stdexcept>
#include <string>

namespace compatamg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of the operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must be inverted is singular to working precision
/// (reciprocal condition estimate below the nonsingularity threshold).
class SingularMatrixError : public Error {
 public:
  using Error::Error;
};

/// A matrix that must define an inner product is not SPD.
class NotSpdError : public Error {
 public:
  using Error::Error;
};

/// Malformed configuration or input file. `field()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace compatamg
