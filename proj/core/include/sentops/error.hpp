#pragma once

#include <stdexcept>
#include <string>

namespace sentops {

/// Error classes. Each maps to a distinct process exit code in the CLI.
enum class ErrorCategory {
  kUsage = 2,       // bad configuration or command-line input
  kIo = 3,          // file could not be opened, read or written
  kFormat = 4,      // malformed input data
  kContract = 5,    // precondition of a numerical routine violated
  kArtifact = 6,    // intermediate artifact produced under a different config
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

class UsageError : public Error {
 public:
  explicit UsageError(const std::string& what) : Error(ErrorCategory::kUsage, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorCategory::kFormat, what) {}
};

class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(ErrorCategory::kContract, what) {}
};

class ArtifactError : public Error {
 public:
  explicit ArtifactError(const std::string& what) : Error(ErrorCategory::kArtifact, what) {}
};

}  // namespace sentops
