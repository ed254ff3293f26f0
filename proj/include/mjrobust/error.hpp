#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mjrobust {

/// Malformed arguments: shape mismatch, non-finite data, out-of-range values.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The pivot block of a Schur complement is not positive definite.
class PivotNotPositive : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Psi3 is not uniformly definite of one sign, so the gain operator F is
/// undefined.
class GainUndefined : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A documented precondition of an analysis routine does not hold (e.g. the
/// nominal system is not EMSS).
class PreconditionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-fatal diagnostics (symmetrization, degenerate fits, ...). The default
// handler writes to stderr.
using WarningHandler = std::function<void(std::string_view)>;
void set_warning_handler(WarningHandler handler);
void warn(std::string_view message);

}  // namespace mjrobust
