#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace relaynet {

using Point = Eigen::Vector2d;
using Points = std::vector<Point>;

// Error hierarchy. Every error thrown by the library derives from Error so
// callers that only care about "did planning work" can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidParameter : public Error {
 public:
  using Error::Error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class OutOfBounds : public Error {
 public:
  using Error::Error;
};

class PreconditionViolation : public Error {
 public:
  using Error::Error;
};

class SolverFailure : public Error {
 public:
  using Error::Error;
};

class InfeasibleInitialization : public Error {
 public:
  using Error::Error;
};

class SamplingFailure : public Error {
 public:
  using Error::Error;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

class TruncationError : public FormatError {
 public:
  using FormatError::FormatError;
};

class ArchitectureMismatch : public Error {
 public:
  using Error::Error;
};

class IncompatibleResolution : public Error {
 public:
  using Error::Error;
};

inline double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

}  // namespace relaynet
