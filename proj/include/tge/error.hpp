#pragma once

#include <stdexcept>
#include <string>

namespace tge {

// Unparsable or inconsistent input data (files, shapes, ranges).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Non-finite values produced during optimization.
struct DivergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tge
