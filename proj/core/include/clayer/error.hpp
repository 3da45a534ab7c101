#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>

namespace clayer {

enum class ErrorKind {
  duplicate_feature,
  empty_header,
  invalid_name,
  unknown_feature,
  categorical_in_constraint,
  syntax_error,
  wrong_signs,
  blowup_limit_exceeded,
  unsatisfiable,
  invalid_ordering,
  infeasible_bounds,
  degenerate_strict_interval,
  post_check_failed,
  on_boundary,
  invalid_argument,
  empty_dataset,
  empty_constraint_set,
  not_two_variable,
  no_categorical_features,
  schema_mismatch,
  io_error,
  format_error,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Base of every exception thrown by the library. The kind is stable and
/// meant for programmatic dispatch (the CLI maps kinds onto exit codes).
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Parse failure in a constraint file; positions are 1-based.
class SyntaxError : public Error {
 public:
  SyntaxError(std::size_t line, std::size_t column, const std::string& message)
      : Error(ErrorKind::syntax_error, "line " + std::to_string(line) + ", column " +
                                           std::to_string(column) + ": " + message),
        line_(line),
        column_(column) {}

  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace clayer
