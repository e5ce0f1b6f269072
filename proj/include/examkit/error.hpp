#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace examkit {

enum class ErrorCategory { parse, validation, config, io, transport, endpoint, contract };

inline const char* to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::parse: return "parse";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::config: return "config";
    case ErrorCategory::io: return "io";
    case ErrorCategory::transport: return "transport";
    case ErrorCategory::endpoint: return "endpoint";
    case ErrorCategory::contract: return "contract";
  }
  return "unknown";
}

// Process exit code used by the CLI for each category.
inline int exit_code(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::parse: return 3;
    case ErrorCategory::validation: return 4;
    case ErrorCategory::config: return 5;
    case ErrorCategory::io: return 6;
    case ErrorCategory::transport: return 7;
    case ErrorCategory::endpoint: return 8;
    case ErrorCategory::contract: return 9;
  }
  return 1;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& message)
      : std::runtime_error(message), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& message, std::size_t byte_offset)
      : Error(ErrorCategory::parse,
              message + " (at byte " + std::to_string(byte_offset) + ")"),
        byte_offset_(byte_offset) {}

  std::size_t byte_offset() const noexcept { return byte_offset_; }

 private:
  std::size_t byte_offset_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& message)
      : Error(ErrorCategory::validation, message) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorCategory::config, message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& message) : Error(ErrorCategory::io, message) {}
};

class TransportError : public Error {
 public:
  explicit TransportError(const std::string& message)
      : Error(ErrorCategory::transport, message) {}
};

class EndpointError : public Error {
 public:
  EndpointError(int status, std::string body_excerpt)
      : Error(ErrorCategory::endpoint,
              "endpoint returned HTTP " + std::to_string(status) + ": " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}

  int status() const noexcept { return status_; }
  const std::string& body_excerpt() const noexcept { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class ContractViolation : public Error {
 public:
  explicit ContractViolation(const std::string& message)
      : Error(ErrorCategory::contract, message) {}
};

}  // namespace examkit
