#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace allabel {

/// Base class for data-level failures (bad input files, schema violations,
/// backend errors). Precondition violations by the caller are reported with
/// std::invalid_argument instead.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what);
  ParseError(const std::string& source, const std::string& what);

  std::size_t line() const { return line_; }

 private:
  std::size_t line_ = 0;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// An annotator was asked for something it cannot provide (e.g. logprobs).
class CapabilityError : public Error {
 public:
  using Error::Error;
};

class AnnotatorError : public Error {
 public:
  using Error::Error;
};

class AuthError : public AnnotatorError {
 public:
  using AnnotatorError::AnnotatorError;
};

}  // namespace allabel
