#pragma once

#include <stdexcept>
#include <string>

namespace pbsid {

/// Base class of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid, malformed or dimensionally inconsistent input data.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A numerical precondition does not hold (rank, conditioning, divergence).
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// The stacked regressor of the VARX problem does not have full row rank.
class PersistencyOfExcitationError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace pbsid
