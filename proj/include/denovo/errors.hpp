#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace denovo {

// Error categories double as CLI exit codes.
enum class ErrorCategory {
  kVocabulary = 10,
  kDomain = 11,
  kParse = 12,
  kDimension = 13,
  kConfig = 14,
  kIo = 15,
  kUndefinedTest = 16,
  kNumeric = 17,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

class VocabularyError : public Error {
 public:
  explicit VocabularyError(const std::string& what) : Error(ErrorCategory::kVocabulary, what) {}
};

class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCategory::kDomain, what) {}
};

// Position is 1-based: a character column for sequence text, a line number for MGF.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t position)
      : Error(ErrorCategory::kParse, what + " (at " + std::to_string(position) + ")"),
        position_(position) {}
  std::size_t position() const noexcept { return position_; }

 private:
  std::size_t position_;
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what) : Error(ErrorCategory::kDimension, what) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::kConfig, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::kIo, what) {}
};

class UndefinedTestError : public Error {
 public:
  explicit UndefinedTestError(const std::string& what)
      : Error(ErrorCategory::kUndefinedTest, what) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(ErrorCategory::kNumeric, what) {}
};

}  // namespace denovo
