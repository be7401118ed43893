#pragma once

#include <stdexcept>
#include <string>

namespace fsgn {

// Error categories; values line up with the CLI exit-code contract
// (0 success, 2 usage/config, 3 data, 4 numeric).
enum class ErrorKind {
  invalid_argument = 1,
  config = 2,
  data = 3,
  numeric = 4,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::config, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::data, what) {}
};

// Sequence-file parse failures keep distinct types so callers can tell a
// broken header from a broken body.
class MalformedHeaderError : public DataError {
 public:
  explicit MalformedHeaderError(const std::string& what) : DataError(what) {}
};

class RaggedRowError : public DataError {
 public:
  explicit RaggedRowError(const std::string& what) : DataError(what) {}
};

class NonFiniteValueError : public DataError {
 public:
  explicit NonFiniteValueError(const std::string& what) : DataError(what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorKind::numeric, what) {}
};

[[noreturn]] inline void throw_invalid(const std::string& what) {
  throw Error(ErrorKind::invalid_argument, what);
}

}  // namespace fsgn
