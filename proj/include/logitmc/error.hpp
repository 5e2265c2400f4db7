#ifndef LOGITMC_ERROR_HPP_
#define LOGITMC_ERROR_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace logitmc {

// Every error carries the process exit code the CLI reports for it.
class Error : public std::runtime_error {
public:
  Error(const std::string& what, int exit_code)
      : std::runtime_error(what), exit_code_(exit_code) {}
  int exit_code() const noexcept { return exit_code_; }
  virtual const char* kind() const noexcept { return "error"; }

private:
  int exit_code_;
};

// Bad flags, bad manifest, invalid configuration values.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(what, 1) {}
  const char* kind() const noexcept override { return "config"; }
};

// Malformed or unusable input data, schema violations, file parse failures.
class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(what, 2) {}
  const char* kind() const noexcept override { return "data"; }
};

// Only one outcome class present; the case-control split is meaningless.
class DegenerateOutcomeError : public DataError {
public:
  explicit DegenerateOutcomeError(const std::string& what) : DataError(what) {}
  const char* kind() const noexcept override { return "degenerate-outcome"; }
};

class ParseError : public DataError {
public:
  ParseError(const std::string& path, std::size_t line, const std::string& what)
      : DataError(path + ":" + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }
  const char* kind() const noexcept override { return "parse"; }

private:
  std::size_t line_;
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(what, 3) {}
  const char* kind() const noexcept override { return "numerical"; }
};

// Non-finite log-likelihood term; row is the offending dataset row.
class NonFiniteTermError : public NumericalError {
public:
  NonFiniteTermError(std::size_t row, double value)
      : NumericalError("non-finite log-likelihood term at row " + std::to_string(row) +
                       " (value " + std::to_string(value) + ")"),
        row_(row) {}
  std::size_t row() const noexcept { return row_; }

private:
  std::size_t row_;
};

class BenchmarkError : public Error {
public:
  explicit BenchmarkError(const std::string& what) : Error(what, 4) {}
  const char* kind() const noexcept override { return "benchmark"; }
};

}  // namespace logitmc

#endif  // LOGITMC_ERROR_HPP_
