#ifndef OHMM_ANALYSIS_HPP
#define OHMM_ANALYSIS_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "ohmm/online_em.hpp"

namespace ohmm {

// Per-observation score at interior parameters, in the chart that eliminates
// the last transition column (q(i, m-1) = 1 - sum of the free row entries):
//   d/dq(i,j) = [ sq(i,j)/q(i,j) - sq(i,m-1)/q(i,m-1) ]            (j < m-1)
//   d/dmu(i)  = ( sg1(i) - mu(i) sg0(i) ) / v
//   d/dv      = sum_i ( sg2(i) - 2 mu(i) sg1(i) + mu(i)^2 sg0(i) ) / (2 v^2)
//               - sum_i sg0(i) / (2 v)
// with the statistics of e_step_fb, which already carry the 1/(n+1)
// normalization.  The final subtraction is the log-normalizer term; passing
// omit_variance_normalizer_term = true drops it, leaving only the quadratic
// part of the variance derivative.
struct ScoreVector {
  int m = 0;
  std::vector<double> d_q;   // m rows of (m-1) free-entry partials
  std::vector<double> d_mu;  // m
  double d_v = 0.0;

  // Flat layout (q free entries row-major, then mu, then v); dimension
  // m(m-1) + m + 1.
  std::vector<double> flat() const;
};

ScoreVector score(const HmmParams& params, const std::vector<double>& nu,
                  const std::vector<double>& ys,
                  bool omit_variance_normalizer_term = false);

// Monte Carlo estimate of the per-observation Fisher information at `params`:
// the average over simulated sequences (stationary start, uniform scoring
// prior) of length times the outer product of the per-observation score.
// The inverse and asymptotic standard deviations sqrt(diag(inverse)) are
// left empty when the estimate is numerically singular.
struct FisherEstimate {
  int m = 0;
  int dim = 0;  // m(m-1) + m + 1
  int n_sequences = 0;
  long sequence_length = 0;
  std::vector<double> information;  // dim x dim, row-major, symmetric
  std::vector<double> inverse;      // dim x dim or empty
  std::vector<double> asymptotic_sd;  // dim or empty
};

FisherEstimate fisher_information(const HmmParams& params, int n_sequences,
                                  long sequence_length, std::uint64_t seed,
                                  int workers = 0);

// Asymptotic standard deviations for the trace columns (diagonal transition
// entries, then means, then variance); the dependent entry q(m-1, m-1) uses
// the summed covariance of its row's free entries.  Size 2m + 1.
std::vector<double> trace_column_sds(const FisherEstimate& fisher);

// One instance of the kernel-ratio bound:
//   J_{a,q,b}(x,x') = a(x) q(x,x') b(x') / sum,   and
//   ||J_{a1,q,b1} - J_{a2,q,b2}||_1 <= ( ||a1-a2||_1 + ||b1-b2||_1 ) / epsilon
// for q entrywise >= epsilon > 0.
struct BoundCheck {
  double lhs = 0.0;
  double rhs = 0.0;
  bool pass = false;
};

BoundCheck check_lemma_bound(const std::vector<double>& alpha1,
                             const std::vector<double>& alpha2,
                             const std::vector<double>& beta1,
                             const std::vector<double>& beta2,
                             const std::vector<double>& q, int m, double epsilon);

// sqrt(n) (theta_n - truth) / sd per trace column, using trace_column_sds.
// avg_values rows are empty where the trace carries no averaged estimate.
struct ScaledTrace {
  std::vector<long> n;
  std::vector<std::vector<double>> values;      // rows of 2m + 1 scaled entries
  std::vector<std::vector<double>> avg_values;  // same layout or empty
};

ScaledTrace center_and_scale(const EstimateTrace& trace, const HmmParams& truth,
                             const FisherEstimate& fisher);

// Dense helpers for the small information matrices.
// Inverse via Gauss-Jordan with partial pivoting; returns empty on pivot
// breakdown.
std::vector<double> invert_matrix(const std::vector<double>& a, int n);
// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n);

// Runs fn(i) for i in [0, count) on `workers` threads (0 picks the hardware
// count); exceptions are rethrown in the caller.
void parallel_for(long count, int workers, const std::function<void(long)>& fn);

}  // namespace ohmm

#endif
