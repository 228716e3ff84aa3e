#pragma once

#include <stdexcept>
#include <string>

namespace nichewave {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidKernel : public Error {
 public:
  using Error::Error;
};

class InfiniteMoment : public Error {
 public:
  using Error::Error;
};

class ResourceLimit : public Error {
 public:
  using Error::Error;
};

class UnderResolvedKernel : public Error {
 public:
  using Error::Error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

class IrreducibleOperator : public Error {
 public:
  using Error::Error;
};

/// Iteration budget exhausted. Carries the last certified bracket when one exists.
class NonConvergence : public Error {
 public:
  NonConvergence(const std::string& what, double lower, double upper, long iterations)
      : Error(what), lower_(lower), upper_(upper), iterations_(iterations) {}

  double lower() const { return lower_; }
  double upper() const { return upper_; }
  long iterations() const { return iterations_; }

 private:
  double lower_;
  double upper_;
  long iterations_;
};

class DiscretizationInconsistency : public Error {
 public:
  using Error::Error;
};

class SupersolutionFailure : public Error {
 public:
  using Error::Error;
};

class UniquenessViolation : public Error {
 public:
  using Error::Error;
};

class MonotonicityViolation : public Error {
 public:
  using Error::Error;
};

class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// User-supplied time step exceeds the order-preserving bound.
class StabilityBoundExceeded : public Error {
 public:
  StabilityBoundExceeded(const std::string& what, double bound) : Error(what), bound_(bound) {}
  double bound() const { return bound_; }

 private:
  double bound_;
};

/// Configuration problem; `key()` names the offending entry.
class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what) : Error(what), key_(std::move(key)) {}
  const std::string& key() const { return key_; }

 private:
  std::string key_;
};

}  // namespace nichewave
