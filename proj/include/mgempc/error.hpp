#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mgempc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent inputs (lengths, parameters, data files).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Data file parse failure; carries the 1-based line number.
class ParseError : public InputError {
 public:
  ParseError(const std::string& what, std::size_t line)
      : InputError(what + " (line " + std::to_string(line) + ")"), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A state update would leave the admissible set.
class DynamicsError : public Error {
 public:
  using Error::Error;
};

/// An optimization problem has no feasible point (or could not be solved).
class InfeasibleError : public Error {
 public:
  InfeasibleError(const std::string& what, long step = -1) : Error(what), step_(step) {}
  long step() const noexcept { return step_; }

 private:
  long step_;
};

class BuildError : public InputError {
 public:
  using InputError::InputError;
};

class WindowError : public Error {
 public:
  using Error::Error;
};

class LogError : public Error {
 public:
  using Error::Error;
};

}  // namespace mgempc
