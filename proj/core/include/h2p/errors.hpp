#pragma once

#include <stdexcept>
#include <string>

namespace h2p {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bad parameters, mismatched dimensions, malformed configuration or files.
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// A numerical contract (norm, truncation, spectral bracket) could not be met.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace h2p
