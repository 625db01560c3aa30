#pragma once

#include <stdexcept>
#include <string>

namespace srcid {

/// Point outside the domain an operation is defined on.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid configuration or argument combination (e.g. a measurement point
/// violating the separation conditions).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Factorization failed or a solve missed its residual tolerance.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Particle weights degenerated (all zero or non-finite).
class CollapseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace srcid
