#ifndef OHMM_MODEL_HPP
#define OHMM_MODEL_HPP

#include <cstdint>
#include <vector>

namespace ohmm {

// Parameters of an m-state Markov chain observed in additive Gaussian noise:
//
//   X_t in {0, ..., m-1},  P(X_{t+1} = j | X_t = i) = q(i, j),
//   Y_t = mu(X_t) + sqrt(v) * Z_t,  Z_t iid N(0, 1).
//
// q is stored row-major and rows must sum to one within 1e-12.  v = 0 is
// accepted so the noiseless chain can be simulated; every operation that
// evaluates emission densities requires v > 0.
struct HmmParams {
  int m = 0;
  std::vector<double> q;   // m*m, row-major
  std::vector<double> mu;  // length m
  double v = 0.0;

  HmmParams() = default;
  HmmParams(int m, std::vector<double> q, std::vector<double> mu, double v);

  double trans(int i, int j) const { return q[static_cast<size_t>(i) * m + j]; }

  void validate() const;  // throws ConfigError on any violated constraint
};

// A simulated (or loaded) sample path.  states[t] in 0..m-1 internally;
// serialized output uses 1-based state labels.
struct Trajectory {
  std::vector<int> states;
  std::vector<double> observations;

  long length() const { return static_cast<long>(states.size()); }
};

// Writes the emission exponents -(y - mu(k))^2 / (2 v) for k = 0..m-1.
void emission_exponents(const HmmParams& params, double y, double* out);

// Unnormalized emission weights exp(-(y - mu(k))^2 / (2 v)) with the largest
// exponent subtracted before exponentiation, so the maximum entry is exactly
// one and no underflow can zero the whole vector.  If log_scale is non-null
// it receives the subtracted exponent: the unnormalized kernel value is
// w[k] * exp(*log_scale), and the full Gaussian density additionally carries
// the factor (2 pi v)^{-1/2}.
std::vector<double> emission_weights(const HmmParams& params, double y,
                                     double* log_scale = nullptr);

// Simulates n+1 samples (t = 0..n) with X_0 ~ nu.  Identical inputs give
// identical output on a given platform.
Trajectory simulate(const HmmParams& params, long n, const std::vector<double>& nu,
                    std::uint64_t seed);

// The unique invariant distribution pi with pi q = pi, found by a direct
// linear solve.  Requires an irreducible chain (checked via strong
// connectivity of the positive-entry graph); throws NumericalError otherwise.
std::vector<double> stationary_distribution(const HmmParams& params);

std::vector<double> uniform_distribution(int m);

// Deterministic seed for replicate `index` of a study run under
// `master`: splitmix64 applied to master + (index + 1) * 0x9E3779B97F4A7C15.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

// Checks length, entrywise finiteness/nonnegativity and sum == 1 within 1e-9.
void validate_probability_vector(const std::vector<double>& p, int m, const char* what);

}  // namespace ohmm

#endif
