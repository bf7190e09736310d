#pragma once

#include <stdexcept>
#include <string>

namespace lcanet {

/// Base class for every error raised by the library. The category maps onto
/// the CLI exit codes (validation 1, numerical 2, I/O 3).
class Error : public std::runtime_error {
 public:
  enum class Category { validation = 1, numerical = 2, io = 3 };

  Error(Category category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  Category category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  Category category_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(Category::validation, message) {}
};

/// Parse or schema failure anchored to a location in a source file.
/// `location` is "path:line:column", or just the path when no position is
/// known. Schema messages also name the JSON pointer of the offending value.
class ParseError : public ValidationError {
 public:
  ParseError(std::string location, const std::string& message)
      : ValidationError(location + ": " + message), location_(std::move(location)) {}

  const std::string& location() const noexcept { return location_; }

 private:
  std::string location_;
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& message)
      : Error(Category::numerical, message) {}
};

/// Singular or ill-conditioned technology matrix.
class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(const std::string& message, double condition_estimate,
                      std::size_t pivot_index)
      : NumericalError(message),
        condition_estimate_(condition_estimate),
        pivot_index_(pivot_index) {}

  double condition_estimate() const noexcept { return condition_estimate_; }
  std::size_t pivot_index() const noexcept { return pivot_index_; }

 private:
  double condition_estimate_;
  std::size_t pivot_index_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(Category::io, message) {}
};

}  // namespace lcanet
