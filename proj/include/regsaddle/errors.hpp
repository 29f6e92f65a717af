#pragma once

#include <stdexcept>
#include <string>

namespace regsaddle {

using Index = int;

/// Vector or matrix shapes that do not fit together.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Cholesky met a pivot <= 0.
class NotPositiveDefinite : public std::runtime_error {
 public:
  NotPositiveDefinite(Index pivot_index, double pivot_value);
  Index pivot_index() const noexcept { return pivot_index_; }
  double pivot_value() const noexcept { return pivot_value_; }

 private:
  Index pivot_index_;
  double pivot_value_;
};

/// LDL^T could not find an admissible pivot among the remaining rows.
class PivotBreakdown : public std::runtime_error {
 public:
  PivotBreakdown(Index pivot_index, double pivot_value, double threshold);
  Index pivot_index() const noexcept { return pivot_index_; }

 private:
  Index pivot_index_;
};

/// A zero 1x1 or singular 2x2 block in D during a solve.
class SingularFactor : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed MPS/QPS record. Line numbers are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& reason);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// A valid but unsupported input feature (integer markers, OBJSENSE MAX, ...).
class Unsupported : public std::runtime_error {
 public:
  explicit Unsupported(const std::string& feature);
};

/// lower bound > upper bound on some variable.
class InfeasibleBounds : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The interior-point method could not continue even after raising regularization.
class IllPosed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace regsaddle
