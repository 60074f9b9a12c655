#ifndef OHMM_ERRORS_HPP
#define OHMM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ohmm {

// Invalid arguments or configuration supplied by the caller.
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical degeneracy: reducible chains, zero predictive mass, singular
// information matrices and the like.
struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// Sufficient statistics too degenerate for a parameter update (zero row sum
// or zero state occupancy).  Callers running online decide whether to skip.
struct DegenerateStatsError : NumericalError {
  explicit DegenerateStatsError(const std::string& what) : NumericalError(what) {}
};

}  // namespace ohmm

#endif
