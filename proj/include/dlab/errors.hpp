#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace dlab {

/// Numerical failure: non-finite intermediate, failed factorization,
/// quadrature integrity violation.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Requested operation needs optional data the input does not carry
/// (missing derivative callbacks, missing gradient surfaces).
class UnsupportedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A simulated path left the representable range. Carries the offending
/// path and the first bad step; the path is aborted, never clamped.
class BlowupError : public NumericalError {
 public:
  BlowupError(const std::string& what, std::int64_t path_index, std::int64_t step)
      : NumericalError(what + " (path " + std::to_string(path_index) + ", step " +
                       std::to_string(step) + ")"),
        path_index(path_index),
        step(step) {}

  std::int64_t path_index;
  std::int64_t step;
};

}  // namespace dlab
