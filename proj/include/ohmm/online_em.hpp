#ifndef OHMM_ONLINE_EM_HPP
#define OHMM_ONLINE_EM_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "ohmm/batch_em.hpp"

namespace ohmm {

// Step-size sequence gamma_n for the stochastic-approximation updates.
// Power schedules gamma_n = n^{-a} require a in (0.5, 1] for consistency;
// constant schedules in (0, 1] track drifting parameters but do not converge.
struct StepSchedule {
  enum class Kind { power, constant };
  Kind kind = Kind::power;
  double exponent = 0.6;
  double value = 0.0;

  static StepSchedule power(double exponent);
  static StepSchedule constant(double value);
  double gamma(long n) const;  // n >= 1
  bool consistent() const { return kind == Kind::power; }
};

struct RunConfig {
  HmmParams theta0;
  std::vector<double> nu;  // empty means uniform
  StepSchedule schedule;
  long n_min = 20;   // parameter updates start once n_min observations are absorbed
  long n_avg = -1;   // averaging onset; < 0 disables averaging
  std::uint64_t seed = 0;  // recorded with runs; data is supplied externally

  void validate() const;
};

// Running state of the online algorithm.  Size depends on m only, never on
// how many observations have been absorbed.
struct OnlineState {
  FilterState filter;  // under the current parameter estimate
  AuxStats aux;
  HmmParams theta;
  long skips = 0;  // parameter updates skipped on degenerate statistics

  // Polyak-Ruppert accumulation of the raw estimates theta_i for i > n_avg,
  // flattened as q (m*m), mu (m), v.
  long avg_count = 0;
  std::vector<double> theta_sum;

  // Step workspace, reused across updates and excluded from serialization.
  RetroMatrix retro;
  std::vector<double> scratch;

  long n() const { return filter.n; }
  bool has_average() const { return avg_count > 0; }
};

// Absorbs y0: filter from theta0, statistics seeded with the time-zero term,
// no parameter update (n = 0).
OnlineState online_init(const RunConfig& config, double y0);

// One online step at gamma(n+1): retrospective kernel and filter update under
// the current theta, separated statistic update, then a parameter update from
// sum_x rho(x) phi(x) if at least n_min observations had been absorbed before
// this step.  Degenerate statistics leave theta unchanged and count a skip.
void online_step_inplace(OnlineState& state, const RunConfig& config, double y);

OnlineState online_step(const OnlineState& state, const RunConfig& config, double y);

// Mean of the raw estimates theta_i for i in (n_avg, n], taken from the
// running accumulators; transition rows are renormalized when the summed
// drift exceeds 1e-12.  Requires n > n_avg.
HmmParams polyak_average(const OnlineState& state);

// Same average from an explicit estimate sequence, trace[i] = theta_i.
HmmParams polyak_average(const std::vector<HmmParams>& trace, long n_avg);

struct EstimateRow {
  long n = 0;
  HmmParams theta;
  bool has_avg = false;
  HmmParams theta_avg;
  long skips = 0;
};

struct EstimateTrace {
  std::vector<EstimateRow> rows;
};

// Folds online_step over ys in constant memory, emitting a row at every
// requested checkpoint index plus the final index.  A single-observation
// stream yields the initialization row only.
EstimateTrace run_online(const RunConfig& config, const std::vector<double>& ys,
                         const std::vector<long>& checkpoints);

// Fixed-width text dump; byte size depends on m only, which is what the
// constant-memory contract is checked against.
std::string serialize_state(const OnlineState& state);

}  // namespace ohmm

#endif
