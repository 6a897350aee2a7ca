#pragma once

#include <stdexcept>
#include <string>

namespace dart {

// Base for everything thrown by this library.
struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor shape / dimension disagreements.
struct ShapeError : Error {
  using Error::Error;
};

// Out-of-range ids (vocabulary, class indices, gather ids).
struct IndexError : Error {
  using Error::Error;
};

// Bad user-supplied values (duplicate tokens, empty inputs, bad lengths).
struct ValidationError : Error {
  using Error::Error;
};

// Invalid configuration (eps <= 0, malformed config files, empty grids).
struct ConfigError : Error {
  using Error::Error;
};

// Not enough capacity (reserved ids, examples per class, sequence length).
struct CapacityError : Error {
  using Error::Error;
};

// API contract violations (non-scalar loss, missing gradient).
struct ContractError : Error {
  using Error::Error;
};

// Non-finite values encountered during computation.
struct NumericError : Error {
  using Error::Error;
};

// File I/O failures.
struct IoError : Error {
  using Error::Error;
};

// Loaded artifact does not match what the caller expects (checkpoint
// vocab/spec mismatch).
struct ArtifactError : Error {
  using Error::Error;
};

}  // namespace dart
