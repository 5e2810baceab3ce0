#pragma once

#include <stdexcept>
#include <string>

namespace afdm {

// Bad caller-supplied value: shape mismatch, out-of-range flag, missing handle.
struct invalid_argument : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Unreadable or malformed file, empty dataset, label/count mismatch.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numeric failure: NaN loss, degenerate statistics.
struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace afdm
