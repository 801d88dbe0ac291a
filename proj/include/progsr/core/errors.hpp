#pragma once

#include <stdexcept>
#include <string>

namespace progsr {

// Every failure raised by the library derives from Error so callers can catch
// one type; the subclasses map onto the CLI exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InvalidThreshold : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

class DataError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class StageError : public Error {
 public:
  using Error::Error;
};

class TransitionError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, long long line, long long byte_offset)
      : Error(what + " (line " + std::to_string(line) + ", byte offset " +
              std::to_string(byte_offset) + ")"),
        line_(line),
        byte_offset_(byte_offset) {}

  long long line() const noexcept { return line_; }
  long long byte_offset() const noexcept { return byte_offset_; }

 private:
  long long line_;
  long long byte_offset_;
};

class VersionError : public Error {
 public:
  using Error::Error;
};

// A checkpoint that parses but does not fit the model it is loaded into.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

}  // namespace progsr
