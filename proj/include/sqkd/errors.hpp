#pragma once

#include <stdexcept>
#include <string>

namespace sqkd {

/// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A value violates one of its type invariants (normalization, hermiticity, ...).
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Shapes that do not fit together.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Eigensolver or other numerical routine did not converge.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The attack/channel admits no conclusive outcome (K vanishes).
class DegenerateChannelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sqkd
