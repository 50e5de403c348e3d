#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rgcinit {

/// Broad failure category. The CLI maps these onto its exit codes.
enum class ErrorKind {
  kUsage,       // bad arguments or configuration
  kData,        // malformed, truncated or invalid input data
  kNumerical,   // factorization failure, divergence, degenerate weights
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::kUsage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

/// Bad magic, version, dtype or structure of a file.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

/// Declared sizes disagree with the bytes actually present.
class LengthError : public FormatError {
 public:
  using FormatError::FormatError;
};

/// Well-formed input whose contents violate an invariant (NaN, label range, shapes).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::kNumerical, what) {}
};

class NotPositiveDefinite : public NumericalError {
 public:
  NotPositiveDefinite(std::size_t pivot, const std::string& what)
      : NumericalError(what), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class DegenerateWeights : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DivergedError : public NumericalError {
 public:
  DivergedError(std::size_t iteration, double learning_rate, const std::string& what)
      : NumericalError(what), iteration_(iteration), learning_rate_(learning_rate) {}
  std::size_t iteration() const noexcept { return iteration_; }
  double learning_rate() const noexcept { return learning_rate_; }

 private:
  std::size_t iteration_;
  double learning_rate_;
};

class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace rgcinit
