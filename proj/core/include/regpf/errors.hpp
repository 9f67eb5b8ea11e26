#pragma once

#include <stdexcept>
#include <string>

namespace regpf {

/// Argument outside the domain of a model or configuration (e.g. |phi| >= 1).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Every importance weight vanished; the cloud no longer represents a distribution.
class DegeneracyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Floating-point breakdown that is not a weight collapse (failed factorization, floored scale, ...).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Reading or writing a file failed, or a file did not match its schema.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace regpf
