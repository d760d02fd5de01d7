#pragma once

#include <stdexcept>
#include <string>

namespace mprop {

// Base for everything thrown by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// File-level problems: missing files, short reads, write failures.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// Well-formed-file violations: bad magic, truncated payload, unparsable CSV,
// duplicate indices, out-of-range ids, non-finite entries.
class FormatError : public Error {
 public:
  explicit FormatError(const std::string& msg) : Error(msg) {}
};

// Caller handed an argument that violates a precondition.
class ArgumentError : public Error {
 public:
  explicit ArgumentError(const std::string& msg) : Error(msg) {}
};

// A numerical routine could not reach its contract (non-convergence,
// divergence, degenerate input).
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Configuration rejected before any work started.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

}  // namespace mprop
