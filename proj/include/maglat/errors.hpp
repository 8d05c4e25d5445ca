#pragma once

#include <stdexcept>

namespace maglat {

// Contradictory or unsatisfiable constraint input.
struct InfeasibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical algorithm failed to converge.
struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A requested trap does not exist (saddle, flat or escaping potential).
struct NotATrapError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace maglat
