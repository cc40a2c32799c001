#pragma once

#include <stdexcept>
#include <string>

namespace tdekws {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite value fed into a numerical kernel, or a NaN produced by training.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Shapes or wiring that do not agree with each other.
class StructuralError : public Error {
 public:
  using Error::Error;
};

// Argument outside the domain an operation is defined on.
class DomainError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, long line, const std::string& what)
      : Error(source + ":" + std::to_string(line) + ": " + what), line_(line) {}

  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace tdekws
