#include "ohmm/online_em.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "ohmm/errors.hpp"

namespace ohmm {

StepSchedule StepSchedule::power(double exponent) {
  if (!(exponent > 0.5) || exponent > 1.0)
    throw ConfigError("power schedule exponent must lie in (0.5, 1]");
  StepSchedule s;
  s.kind = Kind::power;
  s.exponent = exponent;
  return s;
}

StepSchedule StepSchedule::constant(double value) {
  if (!(value > 0.0) || value > 1.0)
    throw ConfigError("constant step size must lie in (0, 1]");
  StepSchedule s;
  s.kind = Kind::constant;
  s.value = value;
  return s;
}

double StepSchedule::gamma(long n) const {
  if (n < 1) throw ConfigError("step index must be >= 1");
  if (kind == Kind::constant) return value;
  return std::pow(static_cast<double>(n), -exponent);
}

void RunConfig::validate() const {
  theta0.validate();
  if (theta0.v <= 0.0) throw ConfigError("online EM requires v > 0");
  if (!nu.empty()) validate_probability_vector(nu, theta0.m, "initial distribution");
  if (schedule.kind == StepSchedule::Kind::power) {
    if (!(schedule.exponent > 0.5) || schedule.exponent > 1.0)
      throw ConfigError("power schedule exponent must lie in (0.5, 1]");
  } else if (!(schedule.value > 0.0) || schedule.value > 1.0) {
    throw ConfigError("constant step size must lie in (0, 1]");
  }
  if (n_min < 1) throw ConfigError("n_min must be >= 1");
  if (n_avg >= 0 && n_avg <= n_min)
    throw ConfigError("averaging onset must exceed n_min");
}

OnlineState online_init(const RunConfig& config, double y0) {
  config.validate();
  const int m = config.theta0.m;
  OnlineState state;
  state.theta = config.theta0;
  const std::vector<double> nu = config.nu.empty() ? uniform_distribution(m) : config.nu;
  state.filter = filter_init(config.theta0, nu, y0);
  state.aux = aux_init(gaussian_stats_spec(m), m, y0, true);
  state.theta_sum.assign(static_cast<size_t>(m) * m + m + 1, 0.0);
  return state;
}

namespace {

void accumulate_theta(OnlineState& state) {
  const HmmParams& th = state.theta;
  const int m = th.m;
  double* sum = state.theta_sum.data();
  for (size_t k = 0; k < th.q.size(); ++k) sum[k] += th.q[k];
  for (int i = 0; i < m; ++i) sum[static_cast<size_t>(m) * m + i] += th.mu[i];
  sum[static_cast<size_t>(m) * m + m] += th.v;
  state.avg_count += 1;
}

// Rebuilds parameters from component-wise sums, renormalizing transition
// rows when rounding drift exceeds 1e-12.
HmmParams params_from_sum(const std::vector<double>& sum, long count, int m) {
  HmmParams out;
  out.m = m;
  out.q.resize(static_cast<size_t>(m) * m);
  out.mu.resize(m);
  const double inv = 1.0 / static_cast<double>(count);
  for (size_t k = 0; k < out.q.size(); ++k) out.q[k] = sum[k] * inv;
  for (int i = 0; i < m; ++i) out.mu[i] = sum[static_cast<size_t>(m) * m + i] * inv;
  out.v = sum[static_cast<size_t>(m) * m + m] * inv;
  for (int i = 0; i < m; ++i) {
    double row = 0.0;
    for (int j = 0; j < m; ++j) row += out.q[static_cast<size_t>(i) * m + j];
    if (std::abs(row - 1.0) > 1e-12)
      for (int j = 0; j < m; ++j) out.q[static_cast<size_t>(i) * m + j] /= row;
  }
  out.validate();
  return out;
}

}  // namespace

void online_step_inplace(OnlineState& state, const RunConfig& config, double y) {
  const long n_pre = state.filter.n;
  const double gamma = config.schedule.gamma(n_pre + 1);

  filter_step_inplace(state.filter, state.theta, y, &state.retro);
  gaussian_aux_step_inplace(state.aux, state.retro, y, gamma, state.scratch);

  if (n_pre >= config.n_min) {
    const SummedStats stats = summed_stats(state.aux, state.filter);
    HmmParams theta_new;
    bool clamped = false;
    if (try_m_step(stats, &theta_new, &clamped))
      state.theta = std::move(theta_new);
    else
      state.skips += 1;
  }
  if (config.n_avg >= 0 && state.filter.n > config.n_avg) accumulate_theta(state);
}

OnlineState online_step(const OnlineState& state, const RunConfig& config, double y) {
  OnlineState next = state;
  online_step_inplace(next, config, y);
  return next;
}

HmmParams polyak_average(const OnlineState& state) {
  if (state.avg_count < 1)
    throw ConfigError("averaging requested before the averaging onset");
  return params_from_sum(state.theta_sum, state.avg_count, state.theta.m);
}

HmmParams polyak_average(const std::vector<HmmParams>& trace, long n_avg) {
  const long n = static_cast<long>(trace.size()) - 1;
  if (n < 0) throw ConfigError("empty estimate sequence");
  if (n_avg < -1 || n_avg >= n)
    throw ConfigError("averaging onset must precede the end of the sequence");
  const int m = trace[0].m;
  std::vector<double> sum(static_cast<size_t>(m) * m + m + 1, 0.0);
  long count = 0;
  for (long i = n_avg + 1; i <= n; ++i) {
    const HmmParams& th = trace[i];
    if (th.m != m) throw ConfigError("estimate sequence mixes state counts");
    for (size_t k = 0; k < th.q.size(); ++k) sum[k] += th.q[k];
    for (int j = 0; j < m; ++j) sum[static_cast<size_t>(m) * m + j] += th.mu[j];
    sum[static_cast<size_t>(m) * m + m] += th.v;
    ++count;
  }
  return params_from_sum(sum, count, m);
}

namespace {

EstimateRow snapshot(const OnlineState& state) {
  EstimateRow row;
  row.n = state.n();
  row.theta = state.theta;
  row.skips = state.skips;
  row.has_avg = state.has_average();
  if (row.has_avg) row.theta_avg = polyak_average(state);
  return row;
}

}  // namespace

EstimateTrace run_online(const RunConfig& config, const std::vector<double>& ys,
                         const std::vector<long>& checkpoints) {
  if (ys.empty()) throw ConfigError("observation record must be nonempty");
  for (long c : checkpoints)
    if (c < 0) throw ConfigError("checkpoint indices must be >= 0");

  const long final = static_cast<long>(ys.size()) - 1;
  std::vector<long> want(checkpoints);
  want.push_back(final);
  std::sort(want.begin(), want.end());
  want.erase(std::unique(want.begin(), want.end()), want.end());
  while (!want.empty() && want.back() > final) want.pop_back();

  EstimateTrace trace;
  OnlineState state = online_init(config, ys[0]);
  size_t next = 0;
  if (next < want.size() && want[next] == 0) {
    trace.rows.push_back(snapshot(state));
    ++next;
  }
  for (long t = 1; t <= final; ++t) {
    online_step_inplace(state, config, ys[t]);
    if (next < want.size() && want[next] == t) {
      trace.rows.push_back(snapshot(state));
      ++next;
    }
  }
  return trace;
}

std::string serialize_state(const OnlineState& state) {
  std::string out;
  char buf[64];
  auto put_int = [&](long long x) {
    std::snprintf(buf, sizeof buf, "%020lld\n", x);
    out += buf;
  };
  auto put_real = [&](double x) {
    std::snprintf(buf, sizeof buf, "%+25.17e\n", x);
    out += buf;
  };
  put_int(state.theta.m);
  put_int(state.filter.n);
  put_int(state.skips);
  put_int(state.avg_count);
  put_real(state.filter.loglik);
  for (double x : state.filter.phi) put_real(x);
  for (double x : state.theta.q) put_real(x);
  for (double x : state.theta.mu) put_real(x);
  put_real(state.theta.v);
  for (double x : state.aux.rho) put_real(x);
  for (double x : state.theta_sum) put_real(x);
  return out;
}

}  // namespace ohmm
