#pragma once

#include <stdexcept>
#include <string>

namespace gridcast {

/// Base class for all errors raised by the library. Data and validation
/// problems throw subclasses of this; programming errors use assertions.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A malformed input file. Carries the path and 1-based line number when known.
class ParseError : public Error {
 public:
  ParseError(const std::string& path, int line, const std::string& what)
      : Error(path + ":" + std::to_string(line) + ": " + what),
        path_(path),
        line_(line) {}
  explicit ParseError(const std::string& what) : Error(what), line_(0) {}

  const std::string& path() const { return path_; }
  int line() const { return line_; }

 private:
  std::string path_;
  int line_ = 0;
};

/// An input that parsed but violates a documented invariant.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// An iterative fit that failed to converge or produced an invalid state.
class FitError : public Error {
 public:
  using Error::Error;
};

} // namespace gridcast
