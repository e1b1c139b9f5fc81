#pragma once

#include <stdexcept>
#include <string>

namespace pairsource {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input-side failures (CLI exit code 2).

class InvalidInput : public Error {
 public:
  using Error::Error;
};

class OutOfRange : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

class ParseError : public InvalidInput {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InvalidInput(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Numerical failures (CLI exit code 3).

class NumericalError : public Error {
 public:
  using Error::Error;
};

class DomainError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class InsufficientData : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class IdentifiabilityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class PrecisionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class UndefinedStatistic : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class NoResonance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class FitFailure : public NumericalError {
 public:
  FitFailure(const std::string& what, double last_rms)
      : NumericalError(what + " (last rms " + std::to_string(last_rms) + ")"), last_rms_(last_rms) {}
  double last_rms() const noexcept { return last_rms_; }

 private:
  double last_rms_;
};

/// Requested operating point is at or above the OPO threshold; the below-threshold model does not apply.
class RegimeError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace pairsource
