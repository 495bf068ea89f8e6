#pragma once

#include <stdexcept>
#include <string>

namespace laql {

/// Coarse error categories; the CLI maps each one to its own exit code.
enum class ErrorCategory {
  kConfig = 2,
  kDomain = 3,
  kParse = 4,
  kTooLarge = 5,
  kDiverged = 6,
  kIo = 7,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

/// Invalid configuration or out-of-range parameter.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::kConfig, what) {}
};

/// A mathematical precondition does not hold (zero rate, co-located user, ...).
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCategory::kDomain, what) {}
};

class ParseError : public Error {
 public:
  explicit ParseError(const std::string& what) : Error(ErrorCategory::kParse, what) {}
};

/// Input file held no usable data rows.
class EmptyDatasetError : public ParseError {
 public:
  explicit EmptyDatasetError(const std::string& what) : ParseError(what) {}
};

/// Exhaustive enumeration refused because the state space exceeds the cap.
class TooLargeError : public Error {
 public:
  explicit TooLargeError(const std::string& what) : Error(ErrorCategory::kTooLarge, what) {}
};

class TrainingDivergedError : public Error {
 public:
  TrainingDivergedError(const std::string& what, std::size_t epoch)
      : Error(ErrorCategory::kDiverged, what), epoch_(epoch) {}

  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

inline const char* category_name(ErrorCategory c) {
  switch (c) {
    case ErrorCategory::kConfig: return "config";
    case ErrorCategory::kDomain: return "domain";
    case ErrorCategory::kParse: return "parse";
    case ErrorCategory::kTooLarge: return "too-large";
    case ErrorCategory::kDiverged: return "diverged";
    case ErrorCategory::kIo: return "io";
  }
  return "unknown";
}

}  // namespace laql
