#pragma once

#include <stdexcept>
#include <string>

namespace tweetopics {

// Process exit codes used by the command line front end.
enum class ExitCode : int {
  ok = 0,
  config = 2,
  dependency = 3,
  data = 4,
};

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual ExitCode code() const noexcept { return ExitCode::data; }
};

// Invalid configuration or parameter values.
class ConfigError : public Error {
 public:
  using Error::Error;
  ExitCode code() const noexcept override { return ExitCode::config; }
};

// A required upstream artifact is missing or stale.
class DependencyError : public Error {
 public:
  using Error::Error;
  ExitCode code() const noexcept override { return ExitCode::dependency; }
};

// Malformed or unusable input data.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace tweetopics
