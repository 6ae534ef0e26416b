#pragma once

#include <stdexcept>
#include <string>

namespace safelens {

/// Coarse classification of failures; the CLI maps each kind onto a fixed
/// process exit code.
enum class ErrorKind { usage, data, backend };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad configuration or command-line input.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message)
      : Error(ErrorKind::usage, message) {}
};

/// Malformed files, violated data contracts, dimension mismatches.
class DataError : public Error {
 public:
  explicit DataError(const std::string& message)
      : Error(ErrorKind::data, message) {}
};

enum class BackendFailure { transport, protocol, timeout };

class BackendError : public Error {
 public:
  BackendError(BackendFailure failure, const std::string& message)
      : Error(ErrorKind::backend, message), failure_(failure) {}

  [[nodiscard]] BackendFailure failure() const noexcept { return failure_; }

 private:
  BackendFailure failure_;
};

class TransportError : public BackendError {
 public:
  explicit TransportError(const std::string& message)
      : BackendError(BackendFailure::transport, message) {}
};

class ProtocolError : public BackendError {
 public:
  explicit ProtocolError(const std::string& message)
      : BackendError(BackendFailure::protocol, message) {}
};

class TimeoutError : public BackendError {
 public:
  TimeoutError(const std::string& message, double budget_seconds)
      : BackendError(BackendFailure::timeout, message),
        budget_seconds_(budget_seconds) {}

  [[nodiscard]] double budget_seconds() const noexcept { return budget_seconds_; }

 private:
  double budget_seconds_;
};

}  // namespace safelens
