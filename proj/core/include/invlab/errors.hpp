#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace invlab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A scalar parameter is outside its admissible domain (b <= 1, delta < 0, ...).
class ParameterError : public Error {
public:
  using Error::Error;
};

/// Sequence lengths disagree, or a required sequence is empty.
class ShapeError : public Error {
public:
  using Error::Error;
};

/// A function argument lies outside the function's domain (x outside [0,1], t <= 0).
class DomainError : public Error {
public:
  using Error::Error;
};

/// The model violates a method's standing assumption (Landweber with ||B|| > 1).
class ModelError : public Error {
public:
  using Error::Error;
};

/// Linear algebra broke down (failed factorization of a system that should be SPD).
class NumericalError : public Error {
public:
  using Error::Error;
};

/// The filter annihilates the whole spectrum, so ratios against ||L||_HS are undefined.
class DegenerateFilterError : public Error {
public:
  using Error::Error;
};

class ValidationError : public Error {
public:
  using Error::Error;
};

class IoError : public Error {
public:
  using Error::Error;
};

struct IterationRecord {
  int iteration = 0;
  double objective = 0.0;
  double optimality = 0.0;
  double step = 0.0;
};

/// Raised when an iterative solver exhausts its budget; carries a thinned trace.
class ConvergenceError : public Error {
public:
  ConvergenceError(const std::string& what, std::vector<IterationRecord> trace)
      : Error(what), trace_(std::move(trace)) {}

  const std::vector<IterationRecord>& trace() const noexcept { return trace_; }

private:
  std::vector<IterationRecord> trace_;
};

}  // namespace invlab
