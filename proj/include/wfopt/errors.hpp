#pragma once

#include <stdexcept>
#include <string>

namespace wfopt {

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct InvalidArgument : Error {
  using Error::Error;
};

struct DimensionMismatch : Error {
  using Error::Error;
};

// Constrained sampling could not reach the requested count.
struct InfeasibleDomainError : Error {
  using Error::Error;
};

struct DuplicateSampleError : Error {
  using Error::Error;
};

// Correlation matrix stayed non-positive-definite at the nugget cap.
struct FitFailureError : Error {
  using Error::Error;
};

struct LayoutError : Error {
  using Error::Error;
};

// More turbines than feasible grid cells.
struct CapacityError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct TimeoutError : Error {
  using Error::Error;
};

struct ProtocolError : Error {
  using Error::Error;
};

}  // namespace wfopt
