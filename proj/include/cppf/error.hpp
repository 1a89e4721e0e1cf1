#pragma once

#include <stdexcept>
#include <string>

namespace cppf {

// Base for every error raised by the toolkit.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input data (datasets, fixtures, task files).
class DataError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// A transient failure talking to an external endpoint; callers may retry.
class RetryableError : public Error {
 public:
  using Error::Error;
};

class ReplayMissError : public Error {
 public:
  explicit ReplayMissError(const std::string& digest)
      : Error("replay miss for prompt digest " + digest), digest_(digest) {}
  const std::string& digest() const { return digest_; }

 private:
  std::string digest_;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace cppf
