#pragma once

#include <stdexcept>
#include <string>

namespace fracsaddle {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid input: bad domain, cutoff, exponent, config value.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A pointwise evaluator produced inf/nan.
class NonFiniteError : public Error {
 public:
  using Error::Error;
};

/// The solver could not produce the requested object (singular block, wrong problem type).
class SolverError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace fracsaddle
