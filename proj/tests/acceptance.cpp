// Acceptance suite, fast criteria.  Each criterion prints one line; the
// tolerances live next to the checks.  Criterion 10 (averaging efficiency)
// runs in the separate slow binary.
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "ohmm/analysis.hpp"
#include "ohmm/batch_em.hpp"
#include "ohmm/filtering.hpp"
#include "ohmm/model.hpp"
#include "ohmm/online_em.hpp"
#include "ohmm/smoothing.hpp"

#include "acceptance_common.hpp"
#include "oracles.hpp"

using acceptance::Outcome;
using acceptance::fmt;
using acceptance::median;
using ohmm::HmmParams;

namespace {

// Worst per-iteration log-likelihood drop across every batch EM run in the
// suite (criterion 4 aggregates it).
struct MonotonicityLedger {
  double worst_drop = 0.0;  // most negative increment seen
  long runs = 0;

  void absorb(const ohmm::EmTrace& trace) {
    ++runs;
    for (size_t k = 1; k < trace.iterates.size(); ++k)
      worst_drop = std::min(
          trace.iterates[k].loglik - trace.iterates[k - 1].loglik, worst_drop);
  }
};

double rel_gap(double a, double b) {
  return std::fabs(a - b) / std::max({1.0, std::fabs(a), std::fabs(b)});
}

double worst_stat_gap(const ohmm::SummedStats& a, const ohmm::SummedStats& b) {
  double worst = 0.0;
  for (size_t k = 0; k < a.sq.size(); ++k) worst = std::max(worst, rel_gap(a.sq[k], b.sq[k]));
  for (size_t k = 0; k < a.sg0.size(); ++k) {
    worst = std::max(worst, rel_gap(a.sg0[k], b.sg0[k]));
    worst = std::max(worst, rel_gap(a.sg1[k], b.sg1[k]));
    worst = std::max(worst, rel_gap(a.sg2[k], b.sg2[k]));
  }
  return worst;
}

double worst_param_gap(const HmmParams& a, const HmmParams& b) {
  double worst = 0.0;
  for (size_t k = 0; k < a.q.size(); ++k) worst = std::max(worst, std::fabs(a.q[k] - b.q[k]));
  for (int i = 0; i < a.m; ++i) worst = std::max(worst, std::fabs(a.mu[i] - b.mu[i]));
  return std::max(worst, std::fabs(a.v - b.v));
}

Outcome bayes_misclassification() {
  const HmmParams truth = oracle::study_truth();
  const ohmm::Trajectory traj = ohmm::simulate(
      truth, 1000000, ohmm::stationary_distribution(truth), ohmm::derive_seed(1, 0));
  const double err = ohmm::bayes_error_rate(truth, traj);
  const bool pass = err >= 0.096 && err <= 0.110;
  return {pass, fmt("filtered error %.5f, target [0.096, 0.110], n = 10^6", err)};
}

Outcome tau_identity() {
  std::mt19937_64 rng(202);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + trial % 2;
    const HmmParams params = oracle::random_params(rng, m, 0.05, 1.5, 0.3, 2.0);
    const ohmm::Trajectory traj = ohmm::simulate(
        params, 2000, ohmm::uniform_distribution(m), ohmm::derive_seed(2, trial));
    const ohmm::SuffStatSpec spec = ohmm::gaussian_stats_spec(m);

    ohmm::FilterState filter = ohmm::filter_init(params, ohmm::uniform_distribution(m),
                                                 traj.observations[0]);
    ohmm::AuxStats aux = ohmm::aux_init(spec, m, traj.observations[0], true);
    ohmm::TauStats tau = ohmm::tau_from(aux, filter);
    ohmm::RetroMatrix retro;
    std::vector<double> scratch;
    for (long t = 1; t < traj.length(); ++t) {
      const double gamma = 1.0 / static_cast<double>(t + 1);
      const ohmm::FilterState before = filter;
      tau = ohmm::tau_step(tau, before, params, spec, traj.observations[t], gamma);
      ohmm::filter_step_inplace(filter, params, traj.observations[t], &retro);
      ohmm::gaussian_aux_step_inplace(aux, retro, traj.observations[t], gamma, scratch);
      for (int x = 0; x < m; ++x)
        for (int k = 0; k < spec.dim; ++k)
          worst = std::max(worst,
                           std::fabs(tau.row(x)[k] - filter.phi[x] * aux.row(x)[k]));
    }
  }
  return {worst < 1e-10,
          fmt("max |tau - phi rho| = %.3e over 20 models, tolerance 1e-10", worst)};
}

Outcome fb_recursive_equivalence(MonotonicityLedger& ledger) {
  std::mt19937_64 rng(303);
  double worst_stats = 0.0;
  double worst_trace = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + trial % 2;
    const long n = trial % 2 ? 500 : 50;
    const HmmParams truth = oracle::random_params(rng, m, 0.05, 1.5, 0.3, 2.0);
    const HmmParams init = oracle::random_params(rng, m, 0.1, 1.5, 0.5, 2.0);
    const ohmm::Trajectory traj = ohmm::simulate(
        truth, n, ohmm::uniform_distribution(m), ohmm::derive_seed(3, trial));
    const std::vector<double> nu = ohmm::uniform_distribution(m);

    const ohmm::SummedStats fb = ohmm::e_step_fb(init, nu, traj.observations);
    const ohmm::SummedStats rec = ohmm::e_step_recursive(init, nu, traj.observations);
    worst_stats = std::max(worst_stats, worst_stat_gap(fb, rec));

    const ohmm::EmTrace trace_fb = ohmm::batch_em_run(
        init, nu, traj.observations, 50, ohmm::EStepMode::forward_backward);
    const ohmm::EmTrace trace_rec = ohmm::batch_em_run(
        init, nu, traj.observations, 50, ohmm::EStepMode::recursive);
    ledger.absorb(trace_fb);
    ledger.absorb(trace_rec);
    for (size_t k = 0; k < trace_fb.iterates.size(); ++k)
      worst_trace = std::max(worst_trace, worst_param_gap(trace_fb.iterates[k].params,
                                                          trace_rec.iterates[k].params));
  }
  const bool pass = worst_stats < 1e-9 && worst_trace < 1e-8;
  return {pass, fmt("E-step gap %.3e (tol 1e-9 relative), 50-iteration trace gap "
                    "%.3e (tol 1e-8), 10 instances",
                    worst_stats, worst_trace)};
}

Outcome enumeration_oracle() {
  std::mt19937_64 rng(404);
  double worst_ll = 0.0;
  double worst_stats = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const int m = 1 + trial % 3;
    const long n = 2 + trial % 7;
    const HmmParams params = oracle::random_params(rng, m, 0.05, 1.5, 0.3, 2.0);
    const std::vector<double> nu = oracle::random_prob_vector(rng, m, 0.05);
    const ohmm::Trajectory traj =
        ohmm::simulate(params, n, nu, ohmm::derive_seed(4, trial));

    double ll = 0.0;
    const ohmm::SummedStats stats = ohmm::e_step_fb(params, nu, traj.observations, &ll);
    worst_ll = std::max(worst_ll,
                        rel_gap(ll, oracle::loglik(params, nu, traj.observations)));
    worst_stats = std::max(
        worst_stats,
        worst_stat_gap(stats, oracle::summed_stats(params, nu, traj.observations)));
  }
  const bool pass = worst_ll < 1e-10 && worst_stats < 1e-10;
  return {pass, fmt("log-likelihood gap %.3e, smoothed-statistic gap %.3e vs path "
                    "enumeration (tol 1e-10 relative), 50 instances, n <= 8, m <= 3",
                    worst_ll, worst_stats)};
}

Outcome score_vs_finite_differences() {
  std::mt19937_64 rng(505);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int m = 2 + trial % 2;
    const HmmParams params = oracle::random_params(rng, m, 0.08, 1.2, 0.4, 1.5);
    const HmmParams data_params = oracle::random_params(rng, m, 0.08, 1.2, 0.4, 1.5);
    const ohmm::Trajectory traj = ohmm::simulate(
        data_params, 1000, ohmm::uniform_distribution(m), ohmm::derive_seed(5, trial));
    const std::vector<double> nu = ohmm::uniform_distribution(m);

    const std::vector<double> exact =
        ohmm::score(params, nu, traj.observations).flat();
    const std::vector<double> fd =
        oracle::fd_score(params, nu, traj.observations, 1e-5);
    for (size_t k = 0; k < exact.size(); ++k)
      worst = std::max(worst, rel_gap(exact[k], fd[k]));
  }
  const bool pass = worst < 1e-4;
  return {pass, fmt("max component gap %.3e vs central differences (step 1e-5, "
                    "tol 1e-4 relative), 20 instances, n = 1000",
                    worst)};
}

Outcome lemma_and_corollary() {
  // Lemma: random draws across the (m, epsilon) grid.
  std::mt19937_64 rng(606);
  std::exponential_distribution<double> expo(1.0);
  long draws = 0;
  long lemma_violations = 0;
  const int ms[] = {2, 3, 5};
  for (int m : ms) {
    const double eps_grid[] = {0.05, 0.2, 1.0 / m};
    for (double eps : eps_grid) {
      auto prob_vector = [&](double floor) {
        std::vector<double> w(m);
        double sum = 0.0;
        for (double& x : w) {
          x = expo(rng);
          sum += x;
        }
        for (double& x : w) x = floor + (1.0 - m * floor) * (x / sum);
        return w;
      };
      for (long d = 0; d < 100000 / 9 + 1; ++d) {
        std::vector<double> q;
        q.reserve(static_cast<size_t>(m) * m);
        for (int i = 0; i < m; ++i) {
          const std::vector<double> row = prob_vector(eps);
          q.insert(q.end(), row.begin(), row.end());
        }
        const ohmm::BoundCheck check =
            ohmm::check_lemma_bound(prob_vector(0.0), prob_vector(0.0),
                                    prob_vector(0.0), prob_vector(0.0), q, m, eps);
        ++draws;
        if (!check.pass) ++lemma_violations;
      }
    }
  }

  // Corollary: pinned-endpoint pair expectations on enumerable records.
  long corollary_checks = 0;
  long corollary_violations = 0;
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  const int m = 2;
  for (long n = 2; n <= 8; ++n) {
    for (double eps : {0.1, 0.25, 0.4}) {
      const double rho = 1.0 - eps;
      for (int trial = 0; trial < 3; ++trial) {
        HmmParams params = oracle::random_params(rng, m, eps, 1.0, 0.4, 1.5);
        const ohmm::Trajectory traj = ohmm::simulate(
            params, n, ohmm::uniform_distribution(m),
            ohmm::derive_seed(7, static_cast<std::uint64_t>(n * 100 + trial)));
        std::vector<double> f(static_cast<size_t>(m) * m);
        double f_sup = 0.0;
        for (double& x : f) {
          x = unif(rng);
          f_sup = std::max(f_sup, std::fabs(x));
        }
        for (long t = 1; t <= n; ++t)
          for (int x0 = 0; x0 < m; ++x0)
            for (int xn = 0; xn < m; ++xn)
              for (int x0b = 0; x0b < m; ++x0b)
                for (int xnb = 0; xnb < m; ++xnb) {
                  const double e1 = oracle::pinned_pair_expectation(
                      params, traj.observations, f, t, x0, xn);
                  const double e2 = oracle::pinned_pair_expectation(
                      params, traj.observations, f, t, x0b, xnb);
                  const double bound =
                      (f_sup / eps) *
                      (std::pow(rho, static_cast<double>(t - 1)) +
                       std::pow(rho, static_cast<double>(n - t)));
                  ++corollary_checks;
                  if (std::fabs(e1 - e2) > bound + 1e-12) ++corollary_violations;
                }
      }
    }
  }
  const bool pass = lemma_violations == 0 && corollary_violations == 0;
  return {pass,
          fmt("lemma: %ld violations in %ld draws; corollary: %ld violations in %ld "
              "pinned-endpoint checks (m = 2, n <= 8)",
              lemma_violations, draws, corollary_violations, corollary_checks)};
}

Outcome limiting_em_coincidence(MonotonicityLedger& ledger) {
  const HmmParams truth = oracle::study_truth();
  const HmmParams init = oracle::study_init();
  const std::vector<double> nu = ohmm::uniform_distribution(2);
  const int reps = 20;
  const int iters = 50;

  std::vector<std::vector<double>> q11_500(iters + 1), q11_8000(iters + 1);
  std::vector<std::vector<double>> mu1_500(iters + 1), mu1_8000(iters + 1);
  for (int rep = 0; rep < reps; ++rep) {
    const ohmm::Trajectory traj = ohmm::simulate(
        truth, 8000, ohmm::stationary_distribution(truth), ohmm::derive_seed(8, rep));
    const std::vector<double> short_record(traj.observations.begin(),
                                           traj.observations.begin() + 501);
    const ohmm::EmTrace t500 = ohmm::batch_em_run(init, nu, short_record, iters,
                                                  ohmm::EStepMode::forward_backward);
    const ohmm::EmTrace t8000 = ohmm::batch_em_run(init, nu, traj.observations, iters,
                                                   ohmm::EStepMode::forward_backward);
    ledger.absorb(t500);
    ledger.absorb(t8000);
    for (int k = 0; k <= iters; ++k) {
      q11_500[k].push_back(t500.iterates[k].params.q[0]);
      q11_8000[k].push_back(t8000.iterates[k].params.q[0]);
      mu1_500[k].push_back(t500.iterates[k].params.mu[0]);
      mu1_8000[k].push_back(t8000.iterates[k].params.mu[0]);
    }
  }
  double sup_q11 = 0.0, sup_mu1 = 0.0;
  for (int k = 0; k <= iters; ++k) {
    sup_q11 = std::max(sup_q11, std::fabs(median(q11_500[k]) - median(q11_8000[k])));
    sup_mu1 = std::max(sup_mu1, std::fabs(median(mu1_500[k]) - median(mu1_8000[k])));
  }
  const bool pass = sup_q11 < 0.05 && sup_mu1 < 0.05;
  return {pass, fmt("median-trajectory sup gap n=500 vs n=8000: q(1,1) %.4f, mu(1) "
                    "%.4f (tol 0.05), 20 replications, 50 iterations",
                    sup_q11, sup_mu1)};
}

Outcome online_consistency_ordering() {
  const HmmParams truth = oracle::study_truth();
  const int reps = 20;
  std::vector<double> err_mu2_slow, err_v_slow, err_mu2_fast, err_v_fast;
  for (int rep = 0; rep < reps; ++rep) {
    const ohmm::Trajectory traj = ohmm::simulate(
        truth, 32000, ohmm::stationary_distribution(truth), ohmm::derive_seed(9, rep));
    for (double exponent : {0.6, 1.0}) {
      ohmm::RunConfig config;
      config.theta0 = oracle::study_init();
      config.schedule = ohmm::StepSchedule::power(exponent);
      config.n_min = 20;
      config.n_avg = -1;
      const ohmm::EstimateTrace trace =
          ohmm::run_online(config, traj.observations, {});
      const HmmParams& final_theta = trace.rows.back().theta;
      const double e_mu2 = std::fabs(final_theta.mu[1] - 1.0);
      const double e_v = std::fabs(final_theta.v - 0.5);
      if (exponent == 0.6) {
        err_mu2_slow.push_back(e_mu2);
        err_v_slow.push_back(e_v);
      } else {
        err_mu2_fast.push_back(e_mu2);
        err_v_fast.push_back(e_v);
      }
    }
  }
  const double med_mu2_slow = median(err_mu2_slow);
  const double med_mu2_fast = median(err_mu2_fast);
  const double med_v_slow = median(err_v_slow);
  const double med_v_fast = median(err_v_fast);
  const bool ordering = med_mu2_slow < med_mu2_fast && med_v_slow < med_v_fast;
  const bool absolute = med_mu2_slow < 0.15 && med_v_slow < 0.1;
  return {ordering && absolute,
          fmt("median |mu2 - 1|: %.4f (n^-0.6) vs %.4f (n^-1); median |v - 0.5|: "
              "%.4f vs %.4f; targets < 0.15 / < 0.1 and strict ordering, n = 32000",
              med_mu2_slow, med_mu2_fast, med_v_slow, med_v_fast)};
}

Outcome timing_ordering() {
  const HmmParams truth = oracle::study_truth();
  const HmmParams init = oracle::study_init();
  const std::vector<double> nu = ohmm::uniform_distribution(2);
  const ohmm::Trajectory traj = ohmm::simulate(
      truth, 10000, ohmm::stationary_distribution(truth), ohmm::derive_seed(11, 0));

  auto best_of = [](int repetitions, const std::function<void()>& fn) {
    double best = std::numeric_limits<double>::infinity();
    for (int r = 0; r < repetitions; ++r) {
      const auto t0 = std::chrono::steady_clock::now();
      fn();
      const auto t1 = std::chrono::steady_clock::now();
      best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
    }
    return best;
  };

  const double t_fb = best_of(5, [&] {
    const ohmm::SummedStats stats = ohmm::e_step_fb(init, nu, traj.observations);
    (void)ohmm::m_step(stats);
  });
  const double t_rec = best_of(5, [&] {
    const ohmm::SummedStats stats = ohmm::e_step_recursive(init, nu, traj.observations);
    (void)ohmm::m_step(stats);
  });
  ohmm::RunConfig config;
  config.theta0 = init;
  config.schedule = ohmm::StepSchedule::power(0.6);
  config.n_min = 20;
  const double t_online = best_of(5, [&] {
    ohmm::OnlineState state = ohmm::online_init(config, traj.observations[0]);
    for (long t = 1; t < traj.length(); ++t)
      ohmm::online_step_inplace(state, config, traj.observations[t]);
  });

  const bool pass = t_fb < t_rec && t_online <= 3.0 * t_rec;
  return {pass, fmt("FB iteration %.4f s < recursive iteration %.4f s; online pass "
                    "%.4f s = %.2fx recursive (limit 3x), m = 2, n = 10000",
                    t_fb, t_rec, t_online, t_online / t_rec)};
}

}  // namespace

int main() {
  acceptance::Suite suite;
  MonotonicityLedger ledger;

  suite.criterion(1, "bayes-misclassification", bayes_misclassification);
  suite.criterion(2, "tau-identity", tau_identity);
  suite.criterion(3, "fb-recursive-equivalence",
                  [&] { return fb_recursive_equivalence(ledger); });
  suite.criterion(5, "enumeration-oracle", enumeration_oracle);
  suite.criterion(6, "score-vs-finite-differences", score_vs_finite_differences);
  suite.criterion(7, "lemma-and-corollary-bounds", lemma_and_corollary);
  suite.criterion(8, "limiting-em-coincidence",
                  [&] { return limiting_em_coincidence(ledger); });
  suite.criterion(9, "online-consistency-ordering", online_consistency_ordering);
  suite.criterion(11, "timing-ordering", timing_ordering);

  // Criterion 4 aggregates every batch run recorded by criteria 3 and 8.
  suite.criterion(4, "em-monotonicity", [&]() -> Outcome {
    const bool pass = ledger.worst_drop >= -1e-9;
    return {pass, fmt("worst log-likelihood increment %.3e over %ld batch runs "
                      "(slack 1e-9)",
                      ledger.worst_drop, ledger.runs)};
  });

  return suite.finish();
}
