#ifndef VCFAM_ERRORS_HPP
#define VCFAM_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace vcfam {

// Error categories double as CLI exit codes.
enum class ErrorKind { usage = 2, data = 3, numerical = 4 };

class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

// Bad argument values, violated preconditions, mismatched shapes.
class ParameterError : public Error {
public:
  explicit ParameterError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

class ShapeError : public Error {
public:
  explicit ShapeError(const std::string& what) : Error(ErrorKind::usage, what) {}
};

// Input data that cannot be used: out-of-domain points, malformed files,
// incompatible grids or bases.
class DataError : public Error {
public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

class DomainError : public DataError {
public:
  DomainError(const std::string& what, std::size_t index)
      : DataError(what + " (index " + std::to_string(index) + ")"), index_(index) {}
  std::size_t index() const noexcept { return index_; }

private:
  std::size_t index_;
};

class NumericalError : public Error {
public:
  explicit NumericalError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

// Cholesky breakdown; carries the 0-based pivot where positivity failed.
class SingularError : public NumericalError {
public:
  SingularError(const std::string& what, std::size_t pivot)
      : NumericalError(what + " (pivot " + std::to_string(pivot) + ")"), pivot_(pivot) {}
  std::size_t pivot() const noexcept { return pivot_; }

private:
  std::size_t pivot_;
};

} // namespace vcfam

#endif
