#pragma once

#include <stdexcept>
#include <string>

namespace minerlink {

/// Base of every error the library throws. The CLI maps subclasses onto exit
/// codes (usage 1, data 2, transport 3).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad configuration or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A declared schema column is missing from the ingested header.
class SchemaError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

/// Input data violates a precondition (duplicate uri, unknown key, ...).
class DataError : public Error {
 public:
  using Error::Error;
};

/// The LLM endpoint could not be reached or returned a malformed reply.
class TransportError : public Error {
 public:
  using Error::Error;
};

}  // namespace minerlink
