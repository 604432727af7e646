#pragma once

#include <stdexcept>
#include <string>

namespace dualres {

// Base for every error the library throws. The CLI maps IoError and
// UsageError to exit code 2 and everything else to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

class FormatError : public IoError {
 public:
  using IoError::IoError;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Thrown when a circulant embedding has a non-positive eigenvalue.
class EmbeddingError : public NumericalError {
 public:
  EmbeddingError(const std::string& what, double min_eig)
      : NumericalError(what), min_eig_(min_eig) {}
  double min_eig() const noexcept { return min_eig_; }

 private:
  double min_eig_;
};

}  // namespace dualres
