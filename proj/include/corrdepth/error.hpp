#pragma once

#include <stdexcept>
#include <string>

namespace corrdepth {

/// Root of every error thrown by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Bad input or violated precondition. The CLI maps these to exit code 2.
class InputError : public Error {
public:
  using Error::Error;
};

/// Numerical or solver failure. The CLI maps these to exit code 3.
class NumericalError : public Error {
public:
  using Error::Error;
};

class BoundsError : public InputError {
public:
  using InputError::InputError;
};

class ParseError : public InputError {
public:
  using InputError::InputError;
};

class InsufficientSupport : public InputError {
public:
  using InputError::InputError;
};

class DivisionHazard : public InputError {
public:
  using InputError::InputError;
};

class DegenerateConfiguration : public NumericalError {
public:
  DegenerateConfiguration(const std::string& what, int rank)
      : NumericalError(what), rank_(rank) {}
  /// Numerical rank of the offending point stack (-1 when not applicable).
  int rank() const noexcept { return rank_; }

private:
  int rank_;
};

class NoConsensus : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class IllConditionedJacobian : public NumericalError {
public:
  using NumericalError::NumericalError;
};

class DegenerateAlignment : public NumericalError {
public:
  using NumericalError::NumericalError;
};

}  // namespace corrdepth
