#pragma once

#include <stdexcept>
#include <string>

namespace trialmatch {

// Every module reports failures through this hierarchy so callers (the CLI,
// the HTTP service) can map them onto exit codes and status codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class NotFound : public Error {
 public:
  using Error::Error;
};

class ConflictError : public Error {
 public:
  using Error::Error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class TransportError : public Error {
 public:
  using Error::Error;
};

class ContractViolation : public Error {
 public:
  using Error::Error;
};

class UndefinedMetric : public Error {
 public:
  using Error::Error;
};

class LeakageError : public Error {
 public:
  using Error::Error;
};

// LLM output that could not be parsed; keeps the raw response for audit.
class LlmOutputError : public Error {
 public:
  LlmOutputError(const std::string& what, std::string raw_text)
      : Error(what), raw_text_(std::move(raw_text)) {}

  const std::string& raw_text() const { return raw_text_; }

 private:
  std::string raw_text_;
};

class ExtractionError : public LlmOutputError {
 public:
  using LlmOutputError::LlmOutputError;
};

class DecisionParseError : public LlmOutputError {
 public:
  using LlmOutputError::LlmOutputError;
};

class SummarizationError : public Error {
 public:
  using Error::Error;
};

class EmptyRecordError : public Error {
 public:
  using Error::Error;
};

}  // namespace trialmatch
