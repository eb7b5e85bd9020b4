#pragma once

#include <stdexcept>
#include <string>

namespace bayeshpo {

/// Bad input: out-of-range values, shape mismatches, malformed files.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown: Cholesky failure, non-finite training loss.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace bayeshpo
