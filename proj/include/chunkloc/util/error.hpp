#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace chunkloc {

// Base of every error thrown by the library. The CLI maps the concrete type
// to a machine-readable error code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* code() const noexcept { return "error"; }
};

// Invalid lexicon, synthetic spec, config file or flag value.
class ConfigError : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "config_error"; }
};

// Malformed binary or text file. Carries the byte offset (binary files) or
// the 1-based line number (text files) where parsing stopped.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t position)
      : Error(what + " (at " + std::to_string(position) + ")"), position_(position) {}
  std::uint64_t position() const noexcept { return position_; }
  const char* code() const noexcept override { return "format_error"; }

 private:
  std::uint64_t position_;
};

// Inputs that are well formed but inconsistent with each other
// (missing embedding for an id, too few records for a pattern, ...).
class DataError : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "data_error"; }
};

// Out-of-domain numeric parameter (non-positive temperature, ...).
class ParameterError : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "parameter_error"; }
};

class ShapeError : public Error {
 public:
  using Error::Error;
  const char* code() const noexcept override { return "shape_error"; }
};

}  // namespace chunkloc
