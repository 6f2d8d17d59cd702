#pragma once

#include <stdexcept>
#include <string>

namespace eacl {

/// Bad or missing input data: malformed files, invariant violations,
/// missing upstream artifacts. Maps to CLI exit code 1.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A record failed validation against a type invariant.
class ValidationError : public InputError {
 public:
  using InputError::InputError;
};

/// Transport-level failure talking to a model backend, after retries.
/// Maps to CLI exit code 2.
class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eacl
