#pragma once

#include <stdexcept>
#include <string>

namespace ethlab {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad symmetry sector, model parameters or operator request.
class InvalidSpec : public Error {
 public:
  using Error::Error;
};

// Malformed or insufficient input data (empty sets, mismatched dimensions).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Eigensolver failure, negative density-matrix weights, norm loss, ...
class NumericError : public Error {
 public:
  using Error::Error;
};

class OverflowError : public Error {
 public:
  using Error::Error;
};

// An internal identity that must hold exactly was violated.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace ethlab
