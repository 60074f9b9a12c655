#ifndef OHMM_SMOOTHING_HPP
#define OHMM_SMOOTHING_HPP

#include <functional>
#include <vector>

#include "ohmm/filtering.hpp"
#include "ohmm/model.hpp"

namespace ohmm {

// A vector-valued additive sufficient statistic s(x_prev, x, y).  `eval`
// writes all dim entries for one transition.  `eval_t0`, when set, writes the
// time-zero contribution for end state x (the part of s depending only on
// (x, y)); it is what aux_init places in row x when include_t0 is on.
struct SuffStatSpec {
  int dim = 0;
  std::function<void(int x_prev, int x, double y, double* out)> eval;
  std::function<void(int x, double y, double* out)> eval_t0;
};

// The statistic used by the Gaussian-noise EM updates: transition indicators
// 1{x_prev = i, x = j} stacked with the occupancy moments 1{x = i} y^d for
// d = 0, 1, 2.  Flat layout of each dim = m*m + 3m row:
//   [0, m*m)          transition block, row-major (i*m + j)
//   [m*m + d*m + i]   moment block d, state i
SuffStatSpec gaussian_stats_spec(int m);

// Intermediate smoothing functional, one row per current state x:
//   rho_n(x) ~ weighted conditional expectation of the accumulated statistic
//   given Y_{0:n} and X_n = x.
// With step sizes gamma_t = 1/(t+1) and a time-zero seed every absorbed term
// carries weight 1/(n+1); general step sizes give the stochastic
// approximation variant.
struct AuxStats {
  int m = 0;
  int dim = 0;
  std::vector<double> rho;  // m rows of length dim

  double* row(int x) { return rho.data() + static_cast<size_t>(x) * dim; }
  const double* row(int x) const { return rho.data() + static_cast<size_t>(x) * dim; }
};

// Rows start at zero; when include_t0 is on, row x additionally receives
// eval_t0(x, y0).
AuxStats aux_init(const SuffStatSpec& spec, int m, double y0, bool include_t0);

// One smoothing update:
//   rho_{n+1}(x) = sum_{x'} { gamma s(x', x, y) + (1 - gamma) rho_n(x') } r(x' | x).
// Dense reference: evaluates the full statistic for every transition and
// never special-cases the layout.
AuxStats aux_step(const AuxStats& aux, const RetroMatrix& retro, const SuffStatSpec& spec,
                  double y_next, double gamma);

// Separated update for the indicator/moment statistic of gaussian_stats_spec:
// the mixing term is a single kernel product and the gamma term touches only
// the sparse support of s, so one step costs O(m^3 + m^2) instead of the
// dense O(m^2 dim).  `scratch` must be reusable storage (resized as needed).
void gaussian_aux_step_inplace(AuxStats& aux, const RetroMatrix& retro, double y_next,
                               double gamma, std::vector<double>& scratch);

// tau_n(x) = phi_n(x) rho_n(x), updated without forming rho:
//   tau_{n+1}(x) = [ gamma sum_{x'} s(x', x, y) phi_n(x') q(x', x)
//                    + (1 - gamma) sum_{x'} tau_n(x') q(x', x) ] g(x, y) / Z,
//   Z = sum_{x', x''} phi_n(x') q(x', x'') g(x'', y).
// Both terms share the joint normalizer Z; emission factors enter through
// the new state, which is what keeps tau identical to phi .* rho.
struct TauStats {
  int m = 0;
  int dim = 0;
  std::vector<double> tau;  // m rows of length dim

  double* row(int x) { return tau.data() + static_cast<size_t>(x) * dim; }
  const double* row(int x) const { return tau.data() + static_cast<size_t>(x) * dim; }
};

// Entrywise product tau(x) = phi(x) * rho(x); used to seed the tau recursion.
TauStats tau_from(const AuxStats& aux, const FilterState& filter);

TauStats tau_step(const TauStats& tau, const FilterState& phi_before,
                  const HmmParams& params, const SuffStatSpec& spec, double y_next,
                  double gamma);

// sum_x phi(x) rho(x): the unconditional statistic estimate fed to the
// M-step.
std::vector<double> weighted_stat_sum(const AuxStats& aux, const FilterState& filter);

// Summed statistics in the layout of gaussian_stats_spec.
struct SummedStats {
  int m = 0;
  std::vector<double> sq;             // m*m transition mass, row-major
  std::vector<double> sg0, sg1, sg2;  // occupancy moments, length m

  double& sq_at(int i, int j) { return sq[static_cast<size_t>(i) * m + j]; }
  double sq_at(int i, int j) const { return sq[static_cast<size_t>(i) * m + j]; }
};

SummedStats summed_stats(const AuxStats& aux, const FilterState& filter);

// Reshape of a flat statistic vector laid out as gaussian_stats_spec.
SummedStats unpack_gaussian_stats(const std::vector<double>& flat, int m);

}  // namespace ohmm

#endif
