#include "ohmm/filtering.hpp"

#include <cmath>
#include <limits>

#include "ohmm/errors.hpp"

namespace ohmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;  // log(2 pi)

double gaussian_log_norm(double v) { return 0.5 * (kLog2Pi + std::log(v)); }

void require_density_params(const HmmParams& params) {
  params.validate();
  if (params.v <= 0.0) throw ConfigError("filtering requires v > 0");
}

}  // namespace

FilterState filter_init(const HmmParams& params, const std::vector<double>& nu, double y0) {
  require_density_params(params);
  validate_probability_vector(nu, params.m, "initial distribution");
  if (!std::isfinite(y0)) throw ConfigError("observation must be finite");

  const int m = params.m;
  FilterState state;
  state.phi.resize(m);
  emission_exponents(params, y0, state.phi.data());

  // Subtract the max exponent over the support of nu so the normalizer is
  // at least nu(argmax) > 0.  States outside the support are zeroed without
  // touching exp: their exponent may exceed emax and overflow.
  double emax = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < m; ++k)
    if (nu[k] > 0.0 && state.phi[k] > emax) emax = state.phi[k];
  double z = 0.0;
  for (int k = 0; k < m; ++k) {
    state.phi[k] = nu[k] > 0.0 ? nu[k] * std::exp(state.phi[k] - emax) : 0.0;
    z += state.phi[k];
  }
  for (int k = 0; k < m; ++k) state.phi[k] /= z;
  state.n = 0;
  state.loglik = std::log(z) + emax - gaussian_log_norm(params.v);
  return state;
}

void filter_step_inplace(FilterState& state, const HmmParams& params, double y,
                         RetroMatrix* retro) {
  const int m = params.m;
  if (!std::isfinite(y)) throw ConfigError("observation must be finite");

  // Predictive distribution sum_{x'} phi(x') q(x', x); sums to one.
  std::vector<double> pred(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double pi = state.phi[i];
    if (pi == 0.0) continue;
    const double* qrow = &params.q[static_cast<size_t>(i) * m];
    for (int j = 0; j < m; ++j) pred[j] += pi * qrow[j];
  }

  if (retro) {
    retro->m = m;
    retro->r.assign(static_cast<size_t>(m) * m, 0.0);
    for (int j = 0; j < m; ++j) {
      if (pred[j] <= 0.0)
        throw NumericalError("zero predictive mass: retrospective kernel undefined");
      for (int i = 0; i < m; ++i)
        retro->r[static_cast<size_t>(i) * m + j] = state.phi[i] * params.trans(i, j) / pred[j];
    }
  }

  std::vector<double> e(m);
  emission_exponents(params, y, e.data());
  double emax = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < m; ++k)
    if (pred[k] > 0.0 && e[k] > emax) emax = e[k];
  double z = 0.0;
  for (int k = 0; k < m; ++k) {
    state.phi[k] = pred[k] > 0.0 ? pred[k] * std::exp(e[k] - emax) : 0.0;
    z += state.phi[k];
  }
  for (int k = 0; k < m; ++k) state.phi[k] /= z;
  state.n += 1;
  state.loglik += std::log(z) + emax - gaussian_log_norm(params.v);
}

std::pair<FilterState, RetroMatrix> filter_step(const FilterState& state,
                                                const HmmParams& params, double y) {
  require_density_params(params);
  if (state.phi.size() != static_cast<size_t>(params.m) || state.n < 0)
    throw ConfigError("filter state does not match the model");
  FilterState next = state;
  RetroMatrix retro;
  filter_step_inplace(next, params, y, &retro);
  return {std::move(next), std::move(retro)};
}

double loglikelihood(const HmmParams& params, const std::vector<double>& nu,
                     const std::vector<double>& ys) {
  if (ys.empty()) throw ConfigError("observation record must be nonempty");
  FilterState state = filter_init(params, nu, ys[0]);
  for (size_t t = 1; t < ys.size(); ++t)
    filter_step_inplace(state, params, ys[t], nullptr);
  return state.loglik;
}

int argmax_state(const std::vector<double>& phi) {
  int best = 0;
  for (int k = 1; k < static_cast<int>(phi.size()); ++k)
    if (phi[k] > phi[best]) best = k;
  return best;
}

double bayes_error_rate(const HmmParams& params, const Trajectory& traj) {
  require_density_params(params);
  const long len = traj.length();
  if (len == 0) throw ConfigError("trajectory must be nonempty");
  if (traj.observations.size() != static_cast<size_t>(len))
    throw ConfigError("trajectory states and observations differ in length");
  for (int s : traj.states)
    if (s < 0 || s >= params.m) throw ConfigError("trajectory state out of range");

  FilterState state = filter_init(params, uniform_distribution(params.m),
                                  traj.observations[0]);
  long wrong = (argmax_state(state.phi) != traj.states[0]) ? 1 : 0;
  for (long t = 1; t < len; ++t) {
    filter_step_inplace(state, params, traj.observations[t], nullptr);
    if (argmax_state(state.phi) != traj.states[t]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(len);
}

}  // namespace ohmm
