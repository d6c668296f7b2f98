#pragma once

#include <stdexcept>
#include <string>

namespace embedrank {

// Base class for every error this library throws on purpose.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionError : Error {
  using Error::Error;
};

struct DomainError : Error {
  using Error::Error;
};

// A vector whose norm is too small to normalize (dead network output).
struct DegenerateVectorError : Error {
  using Error::Error;
};

struct NumericalError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct IoError : Error {
  using Error::Error;
};

struct FormatError : Error {
  using Error::Error;
};

struct EmptyHypothesesError : Error {
  using Error::Error;
};

struct TrainingStalledError : Error {
  TrainingStalledError(int epoch_index, const std::string& msg)
      : Error(msg), epoch(epoch_index) {}
  int epoch;
};

}  // namespace embedrank
