#pragma once

#include <stdexcept>
#include <string>

namespace qhsvm {

// All library failures derive from Error so callers can catch one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Requested size exceeds what the library allows or the data provides.
class CapacityError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

// Bad input values (non-finite features, unusable rows).
class DataError : public Error {
 public:
  using Error::Error;
};

// Malformed files: CSV headers, kernel caches, model files.
class FormatError : public Error {
 public:
  using Error::Error;
};

class NumericError : public Error {
 public:
  using Error::Error;
};

class StructureError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double final_violation)
      : Error(what), final_violation_(final_violation) {}

  double final_violation() const noexcept { return final_violation_; }

 private:
  double final_violation_;
};

}  // namespace qhsvm
