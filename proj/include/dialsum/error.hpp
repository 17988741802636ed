#pragma once

#include <stdexcept>
#include <string>

namespace dialsum {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller passed an argument outside the documented domain.
class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Input data is malformed or inconsistent.
class DataError : public Error {
 public:
  using Error::Error;
};

// An operation was called on data that lacks a required stage
// (e.g. untokenized or untagged turns).
class PreconditionError : public DataError {
 public:
  using DataError::DataError;
};

class DegenerateDataError : public DataError {
 public:
  using DataError::DataError;
};

// Non-finite loss or parameter during optimization.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace dialsum
