#pragma once

#include <stdexcept>
#include <string>

namespace impactsynth {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad shape, out-of-range value, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data could not be read or parsed (file I/O, malformed WAV/PDT1/JSON).
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace impactsynth
