#pragma once

#include <stdexcept>
#include <string>

namespace cqed {

// All library failures derive from Error so callers can catch one type.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Fock truncation too small for the requested amplitudes.
struct TruncationError : Error { using Error::Error; };
// Matrix exponential argument beyond the configured norm bound.
struct OverflowError : Error { using Error::Error; };
struct StepSizeError : Error { using Error::Error; };
struct DimensionMismatch : Error { using Error::Error; };
// Quadrature or dense-matrix work exceeds the configured budget.
struct CostError : Error { using Error::Error; };
struct ZeroProbability : Error { using Error::Error; };
struct DomainError : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IOError : Error { using Error::Error; };

}  // namespace cqed
