#pragma once

#include <stdexcept>
#include <string>

namespace apdlr {

/// Bad user input: configuration values, table sizes, dimension mismatches.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The discrete scheme hit a state it cannot continue from
/// (ill-conditioned implicit solve, non-finite values).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Missing or malformed data files.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace apdlr
