#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scca {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// A model, context or configuration violates its invariants.
class ValidationError : public Error {
public:
  using Error::Error;
};

/// An argument lies outside the domain where a function is defined.
class DomainError : public Error {
public:
  using Error::Error;
};

/// Matrix shapes are incompatible, or an index exceeds the available spectrum.
class DimensionError : public Error {
public:
  using Error::Error;
};

/// Input data matrix is numerically rank deficient.
class RankDeficientError : public Error {
public:
  using Error::Error;
};

/// Round-off pushed a quantity outside its admissible range.
class NumericalError : public Error {
public:
  using Error::Error;
};

class ParseError : public Error {
public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

private:
  std::size_t line_;
};

}  // namespace scca
