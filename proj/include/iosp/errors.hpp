#pragma once

#include <stdexcept>
#include <string>

namespace iosp {

// Categories map one-to-one onto CLI exit codes.
enum class ErrorCategory { config, format, setup, internal };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& what)
      : Error(ErrorCategory::config, "config error on key '" + key + "': " + what),
        key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

class FormatError : public Error {
 public:
  explicit FormatError(const std::string& what) : Error(ErrorCategory::format, what) {}
};

class SetupError : public Error {
 public:
  explicit SetupError(const std::string& what) : Error(ErrorCategory::setup, what) {}
};

// Token count exceeds the context length.
class CapacityError : public SetupError {
 public:
  explicit CapacityError(const std::string& what) : SetupError(what) {}
};

// Shape mismatches and other caller bugs.
class ContractError : public Error {
 public:
  explicit ContractError(const std::string& what) : Error(ErrorCategory::internal, what) {}
};

// A parameter that should have been frozen changed during training.
class FreezeViolation : public Error {
 public:
  explicit FreezeViolation(const std::string& what) : Error(ErrorCategory::internal, what) {}
};

inline int exit_code(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::config: return 2;
    case ErrorCategory::format: return 3;
    case ErrorCategory::setup: return 4;
    case ErrorCategory::internal: return 5;
  }
  return 5;
}

}  // namespace iosp
