#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dagalpha {

/// Base of every error the engine throws. Numerical pathologies never throw;
/// they produce NaN.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

class DuplicateError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Malformed input text. `offset` is a byte offset for expressions and a
/// 1-based data row index for CSV input.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& message)
      : Error(message + " (at " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Transport-level failure talking to a model provider.
class ProviderError : public Error {
 public:
  ProviderError(const std::string& message, bool retriable)
      : Error(message), retriable_(retriable) {}
  bool retriable() const noexcept { return retriable_; }

 private:
  bool retriable_;
};

/// The provider answered but never produced usable structured output.
class GenerationFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace dagalpha
