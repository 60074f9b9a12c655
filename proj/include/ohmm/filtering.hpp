#ifndef OHMM_FILTERING_HPP
#define OHMM_FILTERING_HPP

#include <utility>
#include <vector>

#include "ohmm/model.hpp"

namespace ohmm {

// Filter phi_n(x) = P(X_n = x | Y_{0:n}) together with the exact
// log-likelihood of the absorbed observations (Gaussian normalizing
// constants included).
struct FilterState {
  std::vector<double> phi;
  long n = -1;          // time index of the last absorbed observation
  double loglik = 0.0;  // log p(Y_{0:n})
};

// Retrospective kernel r(i | j) = P(X_n = i | X_{n+1} = j, Y_{0:n})
//                               = phi_n(i) q(i, j) / sum_{i'} phi_n(i') q(i', j).
// Depends on the filter before the update and not on Y_{n+1}.  Stored
// row-major; each column sums to one.
struct RetroMatrix {
  int m = 0;
  std::vector<double> r;  // r[i*m + j] = r(i | j)

  double operator()(int i, int j) const { return r[static_cast<size_t>(i) * m + j]; }
};

// phi_0(x) proportional to nu(x) g(x, y0).  The max emission exponent is
// taken over the support of nu, so the normalizer cannot underflow to zero.
FilterState filter_init(const HmmParams& params, const std::vector<double>& nu, double y0);

// One filter update: phi_{n+1}(x) proportional to
// sum_{x'} phi_n(x') q(x', x) g(x, y), normalized.  When `retro` is non-null
// it receives the retrospective kernel computed from the pre-update filter;
// a zero predictive mass in some column then raises NumericalError (it cannot
// occur when q is entrywise positive).
void filter_step_inplace(FilterState& state, const HmmParams& params, double y,
                         RetroMatrix* retro);

std::pair<FilterState, RetroMatrix> filter_step(const FilterState& state,
                                                const HmmParams& params, double y);

// log p(Y_{0:n}) by running the filter over the whole record.
double loglikelihood(const HmmParams& params, const std::vector<double>& nu,
                     const std::vector<double>& ys);

// Index of the largest entry, ties resolved toward the lower index.
int argmax_state(const std::vector<double>& phi);

// Fraction of time indices where the filtered state estimate
// argmax_x phi_t(x) differs from the simulated state, filter run under
// `params` with a uniform initial distribution.
double bayes_error_rate(const HmmParams& params, const Trajectory& traj);

}  // namespace ohmm

#endif
