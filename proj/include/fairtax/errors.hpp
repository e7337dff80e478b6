#pragma once

#include <stdexcept>
#include <string>

namespace fairtax {

/// Base class for all library errors.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// The virtual value was found to be nonmonotone on the check grid.
struct NotRegularError : Error {
  using Error::Error;
};

/// The density is not both nondecreasing and log-concave.
struct NotStronglyRegularError : Error {
  using Error::Error;
};

/// An allocation rule (or tabulation) violates monotonicity.
struct NotMonotoneError : Error {
  using Error::Error;
};

/// A point or operand has the wrong dimension.
struct DimensionMismatchError : Error {
  using Error::Error;
};

/// Two couplings do not share the same marginal distributions.
struct MarginalMismatchError : Error {
  using Error::Error;
};

/// The operation is not defined for the given inputs (e.g. n >= 3).
struct UnsupportedError : Error {
  using Error::Error;
};

/// Two curves do not share a common percentile grid.
struct GridMismatchError : Error {
  using Error::Error;
};

/// A Lorenz curve was requested for a distribution with nonpositive mean.
struct ZeroMeanError : Error {
  using Error::Error;
};

/// Malformed user input (CLI spec strings, CSV files).
struct UsageError : Error {
  using Error::Error;
};

}  // namespace fairtax
