#pragma once

#include <stdexcept>
#include <string>

namespace ttpdf {

/// Argument outside the admissible domain (index out of range, point outside box, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical breakdown: rank deficiency, non-finite values, solver failure.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid configuration (CLI config files, generator limits).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace ttpdf
