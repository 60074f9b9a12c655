#include "ohmm/batch_em.hpp"

#include <cmath>
#include <limits>

#include "ohmm/errors.hpp"
#include "ohmm/filtering.hpp"

namespace ohmm {

namespace {

void require_density_params(const HmmParams& params) {
  params.validate();
  if (params.v <= 0.0) throw ConfigError("EM requires v > 0");
}

// Normalized forward pass: alpha[t] is the filter at t, c[t] the scaling
// factor, w[t] the max-subtracted emission weights whose subtracted exponents
// accumulate into loglik.
struct ForwardPass {
  long len = 0;
  std::vector<double> alpha;  // len x m
  std::vector<double> w;      // len x m
  std::vector<double> c;      // len
  double loglik = 0.0;
};

ForwardPass forward(const HmmParams& params, const std::vector<double>& nu,
                    const std::vector<double>& ys) {
  require_density_params(params);
  validate_probability_vector(nu, params.m, "initial distribution");
  if (ys.empty()) throw ConfigError("observation record must be nonempty");

  const int m = params.m;
  const long len = static_cast<long>(ys.size());
  ForwardPass fp;
  fp.len = len;
  fp.alpha.resize(static_cast<size_t>(len) * m);
  fp.w.resize(static_cast<size_t>(len) * m);
  fp.c.resize(len);
  constexpr double kLog2Pi = 1.8378770664093454836;
  const double log_norm = 0.5 * (kLog2Pi + std::log(params.v));

  std::vector<double> pred(m), e(m);
  for (long t = 0; t < len; ++t) {
    if (!std::isfinite(ys[t])) throw ConfigError("observation must be finite");
    if (t == 0) {
      pred = nu;
    } else {
      const double* prev = &fp.alpha[static_cast<size_t>(t - 1) * m];
      for (int j = 0; j < m; ++j) pred[j] = 0.0;
      for (int i = 0; i < m; ++i) {
        const double pi = prev[i];
        if (pi == 0.0) continue;
        const double* qrow = &params.q[static_cast<size_t>(i) * m];
        for (int j = 0; j < m; ++j) pred[j] += pi * qrow[j];
      }
    }
    emission_exponents(params, ys[t], e.data());
    double emax = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < m; ++k)
      if (pred[k] > 0.0 && e[k] > emax) emax = e[k];
    double* wt = &fp.w[static_cast<size_t>(t) * m];
    double* at = &fp.alpha[static_cast<size_t>(t) * m];
    double z = 0.0;
    for (int k = 0; k < m; ++k) {
      // A state with zero predictive mass carries zero posterior weight at
      // this time, so its stored emission weight is set to 0 rather than
      // risking exp overflow (its exponent can exceed the support max).
      // Every backward-pass use of that entry is zero-weighted.
      wt[k] = pred[k] > 0.0 ? std::exp(e[k] - emax) : 0.0;
      at[k] = pred[k] * wt[k];
      z += at[k];
    }
    if (!(z > 0.0)) throw NumericalError("zero forward mass");
    for (int k = 0; k < m; ++k) at[k] /= z;
    fp.c[t] = z;
    fp.loglik += std::log(z) + emax - log_norm;
  }
  return fp;
}

}  // namespace

SummedStats e_step_fb(const HmmParams& params, const std::vector<double>& nu,
                      const std::vector<double>& ys, double* loglik_out) {
  const ForwardPass fp = forward(params, nu, ys);
  const int m = params.m;
  const long len = fp.len;

  SummedStats stats;
  stats.m = m;
  stats.sq.assign(static_cast<size_t>(m) * m, 0.0);
  stats.sg0.assign(m, 0.0);
  stats.sg1.assign(m, 0.0);
  stats.sg2.assign(m, 0.0);

  // Backward pass with on-the-fly accumulation of the pair and occupancy
  // terms; beta is kept normalized against the stored scaling factors.
  std::vector<double> beta(m, 1.0), beta_prev(m);
  for (long t = len - 1; t >= 0; --t) {
    const double* at = &fp.alpha[static_cast<size_t>(t) * m];
    const double y = ys[t];
    for (int x = 0; x < m; ++x) {
      const double g = at[x] * beta[x];
      stats.sg0[x] += g;
      stats.sg1[x] += g * y;
      stats.sg2[x] += g * y * y;
    }
    if (t == 0) break;
    const double* wt = &fp.w[static_cast<size_t>(t) * m];
    const double* ap = &fp.alpha[static_cast<size_t>(t - 1) * m];
    const double inv_c = 1.0 / fp.c[t];
    for (int i = 0; i < m; ++i) {
      double acc = 0.0;
      const double* qrow = &params.q[static_cast<size_t>(i) * m];
      double* sqc = &stats.sq[static_cast<size_t>(i) * m];
      for (int j = 0; j < m; ++j) {
        const double move = qrow[j] * wt[j] * beta[j] * inv_c;
        acc += move;
        sqc[j] += ap[i] * move;
      }
      beta_prev[i] = acc;
    }
    beta.swap(beta_prev);
  }

  const double scale = 1.0 / static_cast<double>(len);
  for (double& x : stats.sq) x *= scale;
  for (int i = 0; i < m; ++i) {
    stats.sg0[i] *= scale;
    stats.sg1[i] *= scale;
    stats.sg2[i] *= scale;
  }
  if (loglik_out) *loglik_out = fp.loglik;
  return stats;
}

SummedStats e_step_recursive(const HmmParams& params, const std::vector<double>& nu,
                             const std::vector<double>& ys, double* loglik_out) {
  require_density_params(params);
  if (ys.empty()) throw ConfigError("observation record must be nonempty");

  const SuffStatSpec spec = gaussian_stats_spec(params.m);
  FilterState state = filter_init(params, nu, ys[0]);
  AuxStats aux = aux_init(spec, params.m, ys[0], true);
  RetroMatrix retro;
  std::vector<double> scratch;
  for (size_t t = 1; t < ys.size(); ++t) {
    filter_step_inplace(state, params, ys[t], &retro);
    gaussian_aux_step_inplace(aux, retro, ys[t], 1.0 / static_cast<double>(t + 1), scratch);
  }
  if (loglik_out) *loglik_out = state.loglik;
  return summed_stats(aux, state);
}

bool try_m_step(const SummedStats& stats, HmmParams* out, bool* variance_clamped) {
  const int m = stats.m;
  if (m < 1 || stats.sq.size() != static_cast<size_t>(m) * m ||
      stats.sg0.size() != static_cast<size_t>(m) ||
      stats.sg1.size() != static_cast<size_t>(m) ||
      stats.sg2.size() != static_cast<size_t>(m))
    throw ConfigError("summed statistics have inconsistent sizes");
  if (variance_clamped) *variance_clamped = false;

  HmmParams params;
  params.m = m;
  params.q.resize(static_cast<size_t>(m) * m);
  params.mu.resize(m);
  double total = 0.0;
  for (int i = 0; i < m; ++i) {
    double row = 0.0;
    for (int j = 0; j < m; ++j) row += stats.sq_at(i, j);
    if (!(row > 0.0)) return false;
    for (int j = 0; j < m; ++j) params.q[static_cast<size_t>(i) * m + j] = stats.sq_at(i, j) / row;
    if (!(stats.sg0[i] > 0.0)) return false;
    params.mu[i] = stats.sg1[i] / stats.sg0[i];
    total += stats.sg0[i];
  }

  double v = 0.0, mean1 = 0.0, mean2 = 0.0;
  for (int i = 0; i < m; ++i) {
    v += stats.sg2[i] - params.mu[i] * params.mu[i] * stats.sg0[i];
    mean1 += stats.sg1[i];
    mean2 += stats.sg2[i];
  }
  v /= total;
  mean1 /= total;
  mean2 /= total;
  const double sample_var = mean2 - mean1 * mean1;
  const double floor = 1e-8 * std::max(sample_var, 0.0);
  if (v < floor) {
    v = floor;
    if (variance_clamped) *variance_clamped = true;
  }
  params.v = v;
  params.validate();
  if (out) *out = std::move(params);
  return true;
}

HmmParams m_step(const SummedStats& stats, bool* variance_clamped) {
  HmmParams out;
  if (!try_m_step(stats, &out, variance_clamped))
    throw DegenerateStatsError("zero transition row sum or state occupancy");
  return out;
}

EmTrace batch_em_run(const HmmParams& params0, const std::vector<double>& nu,
                     const std::vector<double>& ys, int iters, EStepMode mode) {
  if (iters < 0) throw ConfigError("iteration count must be >= 0");
  require_density_params(params0);

  EmTrace trace;
  trace.iterates.reserve(iters + 1);
  HmmParams cur = params0;
  for (int k = 0; k < iters; ++k) {
    double ll = 0.0;
    SummedStats stats = (mode == EStepMode::forward_backward)
                            ? e_step_fb(cur, nu, ys, &ll)
                            : e_step_recursive(cur, nu, ys, &ll);
    trace.iterates.push_back({cur, ll});
    cur = m_step(stats);
  }
  trace.iterates.push_back({cur, loglikelihood(cur, nu, ys)});

  for (size_t k = 1; k < trace.iterates.size(); ++k)
    if (trace.iterates[k].loglik < trace.iterates[k - 1].loglik - 1e-9)
      throw NumericalError("EM log-likelihood decreased beyond slack");
  return trace;
}

std::vector<double> smoothed_marginals(const HmmParams& params,
                                       const std::vector<double>& nu,
                                       const std::vector<double>& ys) {
  const ForwardPass fp = forward(params, nu, ys);
  const int m = params.m;
  const long len = fp.len;
  std::vector<double> marg(static_cast<size_t>(len) * m);
  std::vector<double> beta(m, 1.0), beta_prev(m);
  for (long t = len - 1; t >= 0; --t) {
    const double* at = &fp.alpha[static_cast<size_t>(t) * m];
    double* out = &marg[static_cast<size_t>(t) * m];
    for (int x = 0; x < m; ++x) out[x] = at[x] * beta[x];
    if (t == 0) break;
    const double* wt = &fp.w[static_cast<size_t>(t) * m];
    const double inv_c = 1.0 / fp.c[t];
    for (int i = 0; i < m; ++i) {
      double acc = 0.0;
      const double* qrow = &params.q[static_cast<size_t>(i) * m];
      for (int j = 0; j < m; ++j) acc += qrow[j] * wt[j] * beta[j] * inv_c;
      beta_prev[i] = acc;
    }
    beta.swap(beta_prev);
  }
  return marg;
}

double smoothed_error_rate(const HmmParams& params, const Trajectory& traj) {
  const long len = traj.length();
  if (len == 0) throw ConfigError("trajectory must be nonempty");
  if (traj.observations.size() != static_cast<size_t>(len))
    throw ConfigError("trajectory states and observations differ in length");
  const std::vector<double> marg =
      smoothed_marginals(params, uniform_distribution(params.m), traj.observations);
  long wrong = 0;
  std::vector<double> row(params.m);
  for (long t = 0; t < len; ++t) {
    for (int x = 0; x < params.m; ++x) row[x] = marg[static_cast<size_t>(t) * params.m + x];
    if (argmax_state(row) != traj.states[t]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(len);
}

}  // namespace ohmm
