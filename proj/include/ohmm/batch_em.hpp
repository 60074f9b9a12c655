#ifndef OHMM_BATCH_EM_HPP
#define OHMM_BATCH_EM_HPP

#include <vector>

#include "ohmm/smoothing.hpp"

namespace ohmm {

// Smoothed sufficient statistics of a record Y_{0:n}, every term carrying
// weight 1/(n+1):
//   sq(i,j)  = E[ sum_{t=1..n} 1{X_{t-1}=i, X_t=j} | Y_{0:n} ] / (n+1)
//   sgd(i)   = E[ sum_{t=0..n} 1{X_t=i} Y_t^d      | Y_{0:n} ] / (n+1)
// computed by a normalized forward-backward pass.  The scaling factors of the
// forward pass reproduce the exact log-likelihood, returned through
// loglik_out when non-null.
SummedStats e_step_fb(const HmmParams& params, const std::vector<double>& nu,
                      const std::vector<double>& ys, double* loglik_out = nullptr);

// Same statistics via the filter/retrospective recursion with the uniform
// weighting schedule gamma_t = 1/(t+1) and the time-zero seed, so each of the
// n+1 absorbed terms ends with weight exactly 1/(n+1).  Agrees with
// e_step_fb to rounding; kept as the streaming route and cross-check.
SummedStats e_step_recursive(const HmmParams& params, const std::vector<double>& nu,
                             const std::vector<double>& ys, double* loglik_out = nullptr);

// Maximizer of the intermediate quantity:
//   q(i,j) = sq(i,j) / sum_j' sq(i,j'),  mu(i) = sg1(i)/sg0(i),
//   v = sum_i (sg2(i) - mu(i)^2 sg0(i)) / sum_i sg0(i),
// with the updated means entering the variance.  v is floored at
// 1e-8 times the sample variance recovered from the statistics; a clamp is
// reported through variance_clamped.  Throws DegenerateStatsError on a zero
// transition row sum or zero occupancy.
HmmParams m_step(const SummedStats& stats, bool* variance_clamped = nullptr);

// Non-throwing variant; returns false instead of raising on degenerate
// statistics (used by the online updates to skip).
bool try_m_step(const SummedStats& stats, HmmParams* out, bool* variance_clamped);

enum class EStepMode { forward_backward, recursive };

struct EmIterate {
  HmmParams params;
  double loglik;  // exact log-likelihood of `params` on the record
};

// Row k holds the parameters after k M-steps.  loglik is non-decreasing in k
// up to a 1e-9 absolute slack.
struct EmTrace {
  std::vector<EmIterate> iterates;
};

EmTrace batch_em_run(const HmmParams& params0, const std::vector<double>& nu,
                     const std::vector<double>& ys, int iters, EStepMode mode);

// Marginal smoothing P(X_t = x | Y_{0:n}), returned row-major with one row
// per time index.
std::vector<double> smoothed_marginals(const HmmParams& params,
                                       const std::vector<double>& nu,
                                       const std::vector<double>& ys);

// Misclassification rate of argmax_x P(X_t = x | Y_{0:n}) against the
// simulated states; the smoothed counterpart of bayes_error_rate.
double smoothed_error_rate(const HmmParams& params, const Trajectory& traj);

}  // namespace ohmm

#endif
