#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>

namespace mems {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Argument outside the documented domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

class SizeError : public Error {
 public:
  using Error::Error;
};

/// Some node reached the pull-in singularity 1 - u <= 0.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A bracketing search was started on an interval without the required sign change.
class BracketError : public Error {
 public:
  using Error::Error;
};

/// Zero pivot during elimination. For Jacobians this means the linearization is singular.
class PivotError : public Error {
 public:
  PivotError(const std::string& what, std::size_t row) : Error(what), row_(row) {}
  [[nodiscard]] std::size_t row() const noexcept { return row_; }

 private:
  std::size_t row_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, int line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  [[nodiscard]] int line() const noexcept { return line_; }

 private:
  int line_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Either a value or a recoverable failure description.
///
/// Used where failure is an expected numerical outcome (Newton divergence past
/// the fold, a branch without a second solution) rather than a usage error.
template <class T, class E>
class Outcome {
 public:
  Outcome(T value) : state_(std::in_place_index<0>, std::move(value)) {}  // NOLINT
  Outcome(E error) : state_(std::in_place_index<1>, std::move(error)) {}  // NOLINT

  [[nodiscard]] bool has_value() const noexcept { return state_.index() == 0; }
  explicit operator bool() const noexcept { return has_value(); }

  T& value() & {
    check();
    return std::get<0>(state_);
  }
  const T& value() const& {
    check();
    return std::get<0>(state_);
  }
  T&& value() && {
    check();
    return std::get<0>(std::move(state_));
  }

  E& error() & { return std::get<1>(state_); }
  const E& error() const& { return std::get<1>(state_); }

 private:
  void check() const {
    if (!has_value()) throw Error("Outcome holds an error, not a value");
  }

  std::variant<T, E> state_;
};

}  // namespace mems
