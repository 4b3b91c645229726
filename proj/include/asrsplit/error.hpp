#pragma once

#include <stdexcept>
#include <string>

namespace asrsplit {

// Bad user input: flags, config files, missing paths. CLI exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed or inconsistent data: manifests, audio, hypotheses. CLI exit code 3.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedFormatError : public DataError {
 public:
  using DataError::DataError;
};

// Rank-deficient design matrix; the message names the collinear columns.
class RankDeficientError : public DataError {
 public:
  using DataError::DataError;
};

}  // namespace asrsplit
