#pragma once

#include <stdexcept>
#include <string>

namespace kdpc {

/// Bad argument: dimension mismatch, index out of range, invalid parameter.
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A kernel evaluation produced (or would produce) a non-finite value.
class NumericOverflowError : public std::runtime_error {
 public:
  NumericOverflowError(const std::string& what, int term)
      : std::runtime_error(what), term_(term) {}

  /// Index of the offending kernel term.
  int term() const noexcept { return term_; }

 private:
  int term_;
};

/// The kernel/noise pair has no closed-form mean embedding.
class UnsupportedEmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Fewer samples than the requested window depth.
class InsufficientDataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every start (or every penalty stage) of an optimization failed.
class SolverFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A query trajectory is not consistent with the data Hankel matrix.
class NotInBehaviorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Plant integration produced a non-finite state.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, long step)
      : std::runtime_error(what), step_(step) {}

  long step() const noexcept { return step_; }

 private:
  long step_;
};

class GenerationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kdpc
