#pragma once

#include <stdexcept>
#include <string>

namespace kgm {

/// Violated precondition on an argument (exit code 2 at the CLI).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Amplitude bracket does not separate node-crossing from non-crossing shots.
class NoBracket : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A function fails the class membership test of an inequality (not a bug).
class NotInClass : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Should be unreachable; signals a broken discretization.
class InternalError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Stored record written by an incompatible schema.
class SchemaVersionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kgm
