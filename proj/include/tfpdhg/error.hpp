#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace tfpdhg {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Invalid stepsize configuration (e.g. a product that violates the
/// positivity of (1/R) I - A A^T).
class StepsizeError : public Error {
 public:
  using Error::Error;
};

/// Iterative eigensolver failure. Carries the partially reduced diagonal and
/// off-diagonal so callers can inspect how far the iteration got.
class EigenError : public Error {
 public:
  EigenError(const std::string& what, std::vector<double> diag, std::vector<double> off)
      : Error(what), diag_(std::move(diag)), off_(std::move(off)) {}

  const std::vector<double>& partial_diagonal() const { return diag_; }
  const std::vector<double>& partial_offdiagonal() const { return off_; }

 private:
  std::vector<double> diag_;
  std::vector<double> off_;
};

/// Malformed instance file. line() is 1-based; 0 means end of input.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace tfpdhg
