#pragma once

#include <stdexcept>
#include <string>

namespace survmed {

// Input data that cannot be used: unreadable files, bad cells, broken
// dataset invariants.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An estimator failed on otherwise well-formed input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A quantity that is not defined for the given model shape.
class UnsupportedError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace survmed
