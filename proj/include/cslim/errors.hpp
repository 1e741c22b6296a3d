#pragma once

#include <stdexcept>
#include <string>

namespace cslim {

// Base class for every error thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Bad experiment or CLI configuration (maps to exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Unreadable or malformed input data (maps to exit code 3).
class DataError : public Error {
 public:
  using Error::Error;
};

class ParseError : public DataError {
 public:
  using DataError::DataError;
};

class GapInRecord : public DataError {
 public:
  using DataError::DataError;
};

class TooShort : public DataError {
 public:
  using DataError::DataError;
};

// Numerical and precondition failures.

// Matrix logarithm undefined: an eigenvalue sits on the closed negative real axis.
class EigenvalueOnBranchCut : public Error {
 public:
  using Error::Error;
};

class SingularMatrix : public Error {
 public:
  using Error::Error;
};

// Symmetric input has an eigenvalue below the tolerated negative band.
class NotPSD : public Error {
 public:
  using Error::Error;
};

class UnstableDynamics : public Error {
 public:
  using Error::Error;
};

class UnstableMean : public UnstableDynamics {
 public:
  using UnstableDynamics::UnstableDynamics;
};

// Sinusoidal modulation drives the diffusion factor negative.
class DiffusionGoesNegative : public Error {
 public:
  using Error::Error;
};

class RejectionBudgetExceeded : public Error {
 public:
  using Error::Error;
};

// A simulated path left the trusted numeric range.
class NumericalBlowup : public Error {
 public:
  using Error::Error;
};

class LagExceedsRecord : public Error {
 public:
  using Error::Error;
};

// A cyclostationary cell ended up with no admissible sample pairs.
class EmptyCell : public Error {
 public:
  using Error::Error;
};

class TooFewPhases : public Error {
 public:
  using Error::Error;
};

class SingularCovariance : public Error {
 public:
  using Error::Error;
};

// Requested interval count does not divide the phase count.
class IndivisibleInterval : public Error {
 public:
  using Error::Error;
};

// Two periodic series do not live on compatible phase grids.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

class BadWindow : public Error {
 public:
  using Error::Error;
};

class BadCutoff : public Error {
 public:
  using Error::Error;
};

// Relative metrics are undefined against an identically zero reference.
class ZeroTruth : public Error {
 public:
  using Error::Error;
};

class AllPhasesFlagged : public Error {
 public:
  using Error::Error;
};

class EmptyOverlap : public Error {
 public:
  using Error::Error;
};

// Unrecognized plot-data kind.
class UnknownKind : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

}  // namespace cslim
