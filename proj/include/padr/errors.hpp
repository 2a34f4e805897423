#pragma once

#include <stdexcept>
#include <string>

namespace padr {

/// Broad failure class, used by the CLI to choose an exit code.
enum class ErrorKind {
  usage,       // bad flags or configuration
  validation,  // input data or basis spec rejected
  solver,      // a numerical stage failed (non-convergence, singularity)
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what)
      : Error(ErrorKind::validation, what) {}
};

// Malformed cell in an input file. `row` is the 1-based data row (header excluded).
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t row, const std::string& what)
      : ValidationError("row " + std::to_string(row) + ": " + what), row_(row) {}
  std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what) : Error(ErrorKind::solver, what) {}
};

// Iterative solver stopped without meeting its residual tolerance.
class ConvergenceError : public SolverError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : SolverError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

// Objective unbounded along the search path (e.g. balancing has no finite root).
class DivergenceError : public ConvergenceError {
 public:
  using ConvergenceError::ConvergenceError;
};

class SingularMatrixError : public SolverError {
 public:
  using SolverError::SolverError;
};

class OverflowError : public SolverError {
 public:
  using SolverError::SolverError;
};

}  // namespace padr
