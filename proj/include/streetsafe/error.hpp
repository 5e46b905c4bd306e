#pragma once

#include <stdexcept>
#include <string>

namespace streetsafe {

/// Broad failure class; the CLI maps each to a process exit code.
enum class ErrorKind {
  Usage = 1,
  Data = 2,
  Backend = 3,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

class BackendError : public Error {
 public:
  explicit BackendError(const std::string& what) : Error(ErrorKind::Backend, what) {}
};

}  // namespace streetsafe
