#pragma once

#include <stdexcept>
#include <string>

namespace plume {

// Configuration / argument problems map to CLI exit code 2; numerical
// failures map to exit code 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class InvalidConfig : public Error {
 public:
  using Error::Error;
};

class ShapeMismatch : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

class MeshingFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateGeometry : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FactorizationFailure : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IllPosedProblem : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NumericalBlowup : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegenerateStats : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FormatError : public Error {
 public:
  using Error::Error;
};

}  // namespace plume
