#pragma once

#include <stdexcept>
#include <string>

namespace gld {

/// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (corpus files, detect inputs).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Invalid configuration or argument combination.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Corrupted or incompatible checkpoint archive.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint written by an incompatible (newer major) format version.
class VersionError : public CheckpointError {
 public:
  using CheckpointError::CheckpointError;
};

/// Training diverged or a numerical invariant broke at runtime.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace gld
