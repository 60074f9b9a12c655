#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "ohmm/batch_em.hpp"
#include "ohmm/errors.hpp"
#include "ohmm/filtering.hpp"
#include "oracles.hpp"

using ohmm::ConfigError;
using ohmm::DegenerateStatsError;
using ohmm::EmTrace;
using ohmm::EStepMode;
using ohmm::HmmParams;
using ohmm::SummedStats;
using ohmm::Trajectory;

namespace {

std::vector<double> random_obs(std::mt19937_64& rng, long len, double span) {
  std::uniform_real_distribution<double> unif(-span, span);
  std::vector<double> ys(len);
  for (double& y : ys) y = unif(rng);
  return ys;
}

void check_stats_close(const SummedStats& a, const SummedStats& b, double rel) {
  REQUIRE(a.m == b.m);
  for (int i = 0; i < a.m; ++i) {
    for (int j = 0; j < a.m; ++j)
      CHECK(a.sq_at(i, j) == doctest::Approx(b.sq_at(i, j)).epsilon(rel));
    CHECK(a.sg0[i] == doctest::Approx(b.sg0[i]).epsilon(rel));
    CHECK(a.sg1[i] == doctest::Approx(b.sg1[i]).epsilon(rel));
    CHECK(a.sg2[i] == doctest::Approx(b.sg2[i]).epsilon(rel));
  }
}

}  // namespace

TEST_CASE("single-state statistics have closed forms") {
  const HmmParams params(1, {1.0}, {0.3}, 0.8);
  const std::vector<double> ys = {1.0, -2.0, 0.5, 3.0};
  const SummedStats stats = ohmm::e_step_fb(params, {1.0}, ys);
  CHECK(stats.sq_at(0, 0) == doctest::Approx(3.0 / 4.0).epsilon(1e-14));
  CHECK(stats.sg0[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(stats.sg1[0] == doctest::Approx((1.0 - 2.0 + 0.5 + 3.0) / 4.0).epsilon(1e-14));
  CHECK(stats.sg2[0] ==
        doctest::Approx((1.0 + 4.0 + 0.25 + 9.0) / 4.0).epsilon(1e-14));
}

TEST_CASE("forward-backward matches the enumeration oracle") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 30; ++trial) {
    const int m = 2 + trial % 2;
    const long len = 2 + trial % 7;
    const HmmParams params = oracle::random_params(rng, m, 0.02, 1.5, 0.2, 2.0);
    const std::vector<double> nu = oracle::random_prob_vector(rng, m, 0.05);
    const std::vector<double> ys = random_obs(rng, len, 2.5);

    double ll = 0.0;
    const SummedStats got = ohmm::e_step_fb(params, nu, ys, &ll);
    const SummedStats expect = oracle::summed_stats(params, nu, ys);
    check_stats_close(got, expect, 1e-10);
    CHECK(ll == doctest::Approx(oracle::loglik(params, nu, ys)).epsilon(1e-12));
  }
}

TEST_CASE("occupancies sum to one") {
  std::mt19937_64 rng(32);
  for (int trial = 0; trial < 10; ++trial) {
    const int m = 2 + trial % 3;
    const HmmParams params = oracle::random_params(rng, m, 0.02, 1.5, 0.2, 2.0);
    const std::vector<double> ys = random_obs(rng, 200, 2.0);
    const SummedStats stats =
        ohmm::e_step_fb(params, ohmm::uniform_distribution(m), ys);
    double total = 0.0;
    for (int i = 0; i < m; ++i) total += stats.sg0[i];
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    // Transition mass totals (n-1)/n of an observation's weight.
    double qtotal = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) qtotal += stats.sq_at(i, j);
    CHECK(qtotal == doctest::Approx(199.0 / 200.0).epsilon(1e-9));
  }
}

TEST_CASE("uninformative emissions reduce smoothing to the prior chain law") {
  const HmmParams params(2, {0.7, 0.3, 0.4, 0.6}, {1.0, 1.0}, 0.9);
  const std::vector<double> nu = {0.25, 0.75};
  std::mt19937_64 rng(33);
  const std::vector<double> ys = random_obs(rng, 40, 1.0);
  const std::vector<double> marg = ohmm::smoothed_marginals(params, nu, ys);

  std::vector<double> p = nu;
  for (long t = 0; t < 40; ++t) {
    CHECK(marg[2 * t] == doctest::Approx(p[0]).epsilon(1e-12));
    CHECK(marg[2 * t + 1] == doctest::Approx(p[1]).epsilon(1e-12));
    const std::vector<double> prev = p;
    for (int j = 0; j < 2; ++j)
      p[j] = prev[0] * params.trans(0, j) + prev[1] * params.trans(1, j);
  }
}

TEST_CASE("smoothed marginals: rows normalized, oracle match, filter at the end") {
  std::mt19937_64 rng(34);
  const HmmParams params = oracle::random_params(rng, 3, 0.03, 1.5, 0.3, 1.5);
  const std::vector<double> nu = oracle::random_prob_vector(rng, 3, 0.1);
  const std::vector<double> ys = random_obs(rng, 6, 2.0);
  const std::vector<double> marg = ohmm::smoothed_marginals(params, nu, ys);

  for (long t = 0; t < 6; ++t) {
    double sum = 0.0;
    for (int x = 0; x < 3; ++x) sum += marg[3 * t + x];
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    const std::vector<double> expect = oracle::smoothed_marginal(params, nu, ys, t);
    for (int x = 0; x < 3; ++x)
      CHECK(marg[3 * t + x] == doctest::Approx(expect[x]).epsilon(1e-10));
  }
  ohmm::FilterState filter = ohmm::filter_init(params, nu, ys[0]);
  for (long t = 1; t < 6; ++t) ohmm::filter_step_inplace(filter, params, ys[t], nullptr);
  for (int x = 0; x < 3; ++x)
    CHECK(marg[3 * 5 + x] == doctest::Approx(filter.phi[x]).epsilon(1e-12));
}

TEST_CASE("recursive e-step tracks forward-backward") {
  std::mt19937_64 rng(35);
  for (const long n_obs : {5L, 50L, 500L}) {
    for (int trial = 0; trial < 6; ++trial) {
      const int m = 2 + trial % 2;
      const HmmParams params = oracle::random_params(rng, m, 0.02, 1.5, 0.2, 2.0);
      const std::vector<double> nu = oracle::random_prob_vector(rng, m, 0.05);
      const std::vector<double> ys = random_obs(rng, n_obs, 2.0);
      double ll_fb = 0.0, ll_rec = 0.0;
      const SummedStats fb = ohmm::e_step_fb(params, nu, ys, &ll_fb);
      const SummedStats rec = ohmm::e_step_recursive(params, nu, ys, &ll_rec);
      check_stats_close(fb, rec, 1e-9);
      CHECK(ll_fb == doctest::Approx(ll_rec).epsilon(1e-12));
    }
  }
}

TEST_CASE("m_step frozen examples") {
  SummedStats stats;
  stats.m = 2;
  stats.sq = {3.0, 1.0, 2.0, 2.0};
  stats.sg0 = {2.0, 1.0};
  stats.sg1 = {3.0, 1.0};
  stats.sg2 = {5.0, 1.5};
  const HmmParams params = ohmm::m_step(stats);
  CHECK(params.q == std::vector<double>{0.75, 0.25, 0.5, 0.5});
  CHECK(params.mu[0] == 1.5);
  CHECK(params.mu[1] == 1.0);
  // v = [(5 - 1.5^2*2) + (1.5 - 1*1)] / 3
  CHECK(params.v == doctest::Approx((0.5 + 0.5) / 3.0).epsilon(1e-14));

  SummedStats single;
  single.m = 1;
  single.sq = {4.0};
  single.sg0 = {2.0};
  single.sg1 = {3.0};
  single.sg2 = {5.0};
  const HmmParams p1 = ohmm::m_step(single);
  CHECK(p1.q == std::vector<double>{1.0});
  CHECK(p1.mu[0] == 1.5);
  CHECK(p1.v == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("m_step degeneracies") {
  SummedStats stats;
  stats.m = 2;
  stats.sq = {0.0, 0.0, 1.0, 1.0};  // first row sum is zero
  stats.sg0 = {1.0, 1.0};
  stats.sg1 = {0.0, 0.0};
  stats.sg2 = {1.0, 1.0};
  CHECK_THROWS_AS(ohmm::m_step(stats), DegenerateStatsError);
  HmmParams out;
  bool clamped = true;
  CHECK_FALSE(ohmm::try_m_step(stats, &out, &clamped));

  stats.sq = {1.0, 1.0, 1.0, 1.0};
  stats.sg0 = {2.0, 0.0};  // zero occupancy
  CHECK_THROWS_AS(ohmm::m_step(stats), DegenerateStatsError);

  stats.sg0 = {2.0};  // wrong size is a configuration error, not degeneracy
  CHECK_THROWS_AS(ohmm::try_m_step(stats, &out, &clamped), ConfigError);
}

TEST_CASE("variance floor clamps collapsed statistics") {
  SummedStats stats;
  stats.m = 2;
  stats.sq = {0.4, 0.1, 0.1, 0.4};
  stats.sg0 = {0.5, 0.5};
  stats.sg1 = {0.0, 0.5};   // means (0, 1)
  stats.sg2 = {0.0, 0.5};   // exactly mu^2 * sg0: fitted variance collapses to 0
  bool clamped = false;
  const HmmParams params = ohmm::m_step(stats, &clamped);
  CHECK(clamped);
  // sample variance = E[y^2] - E[y]^2 = 0.5 - 0.25
  CHECK(params.v == doctest::Approx(1e-8 * 0.25).epsilon(1e-12));

  clamped = true;
  stats.sg2 = {0.3, 0.8};
  const HmmParams ok = ohmm::m_step(stats, &clamped);
  CHECK_FALSE(clamped);
  CHECK(ok.v == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("EM is monotone and both modes agree") {
  std::mt19937_64 rng(36);
  for (int trial = 0; trial < 3; ++trial) {
    const HmmParams truth = oracle::random_params(rng, 2, 0.1, 1.0, 0.3, 1.0);
    const Trajectory traj = ohmm::simulate(
        truth, 500, ohmm::uniform_distribution(2), ohmm::derive_seed(600, trial));
    HmmParams init = truth;
    init.mu[0] -= 0.4;
    init.mu[1] += 0.3;
    init.v = 2.0;

    const std::vector<double> nu = ohmm::uniform_distribution(2);
    const EmTrace fb =
        ohmm::batch_em_run(init, nu, traj.observations, 10, EStepMode::forward_backward);
    const EmTrace rec =
        ohmm::batch_em_run(init, nu, traj.observations, 10, EStepMode::recursive);
    REQUIRE(fb.iterates.size() == 11);
    REQUIRE(rec.iterates.size() == 11);
    for (size_t k = 1; k < fb.iterates.size(); ++k)
      CHECK(fb.iterates[k].loglik >= fb.iterates[k - 1].loglik - 1e-9);
    for (size_t k = 0; k < fb.iterates.size(); ++k) {
      const HmmParams& a = fb.iterates[k].params;
      const HmmParams& b = rec.iterates[k].params;
      for (int e = 0; e < 4; ++e) CHECK(a.q[e] == doctest::Approx(b.q[e]).epsilon(1e-8));
      for (int e = 0; e < 2; ++e)
        CHECK(a.mu[e] == doctest::Approx(b.mu[e]).epsilon(1e-8));
      CHECK(a.v == doctest::Approx(b.v).epsilon(1e-8));
    }
  }
}

TEST_CASE("trace log-likelihoods are the exact ones") {
  const HmmParams truth = oracle::study_truth();
  const Trajectory traj = ohmm::simulate(truth, 300, {0.5, 0.5}, 9);
  const std::vector<double> nu = ohmm::uniform_distribution(2);
  const EmTrace trace = ohmm::batch_em_run(oracle::study_init(), nu, traj.observations,
                                           5, EStepMode::forward_backward);
  for (const auto& it : trace.iterates)
    CHECK(it.loglik ==
          doctest::Approx(ohmm::loglikelihood(it.params, nu, traj.observations))
              .epsilon(1e-12));
}

TEST_CASE("zero iterations return the initial point only") {
  const HmmParams init = oracle::study_init();
  const std::vector<double> ys = {0.1, 0.9, 1.1};
  const EmTrace trace = ohmm::batch_em_run(init, {0.5, 0.5}, ys, 0,
                                           EStepMode::forward_backward);
  REQUIRE(trace.iterates.size() == 1);
  CHECK(trace.iterates[0].params.q == init.q);
  CHECK(trace.iterates[0].loglik ==
        doctest::Approx(ohmm::loglikelihood(init, {0.5, 0.5}, ys)).epsilon(1e-14));
}

TEST_CASE("one EM iteration from truth on near-noiseless data stays put") {
  const HmmParams truth(2, {0.9, 0.1, 0.2, 0.8}, {0.0, 1.0}, 1e-4);
  const Trajectory traj =
      ohmm::simulate(truth, 5000, ohmm::stationary_distribution(truth), 44);
  const EmTrace trace =
      ohmm::batch_em_run(truth, ohmm::uniform_distribution(2), traj.observations, 1,
                         EStepMode::forward_backward);
  const HmmParams& fitted = trace.iterates.back().params;
  for (int e = 0; e < 4; ++e) CHECK(std::abs(fitted.q[e] - truth.q[e]) < 0.02);
  CHECK(std::abs(fitted.mu[0] - 0.0) < 0.005);
  CHECK(std::abs(fitted.mu[1] - 1.0) < 0.005);
  CHECK(fitted.v == doctest::Approx(1e-4).epsilon(0.1));
}

TEST_CASE("study-regime EM approaches the true parameters") {
  const HmmParams truth = oracle::study_truth();
  const Trajectory traj =
      ohmm::simulate(truth, 8000, ohmm::stationary_distribution(truth), 2);
  const EmTrace trace =
      ohmm::batch_em_run(oracle::study_init(), ohmm::uniform_distribution(2),
                         traj.observations, 50, EStepMode::forward_backward);
  const HmmParams& fitted = trace.iterates.back().params;
  CHECK(std::abs(fitted.trans(0, 0) - 0.95) < 0.05);
  CHECK(std::abs(fitted.mu[1] - 1.0) < 0.15);
  CHECK(std::abs(fitted.v - 0.5) < 0.1);
}

TEST_CASE("smoothed classification is at least as good as filtering here") {
  const HmmParams truth = oracle::study_truth();
  const Trajectory traj =
      ohmm::simulate(truth, 20000, ohmm::stationary_distribution(truth), 21);
  const double filtered = ohmm::bayes_error_rate(truth, traj);
  const double smoothed = ohmm::smoothed_error_rate(truth, traj);
  CHECK(smoothed > 0.0);
  CHECK(smoothed < filtered + 0.005);
}

TEST_CASE("batch EM rejects invalid setups") {
  const HmmParams init = oracle::study_init();
  const std::vector<double> ys = {0.1, 0.9};
  CHECK_THROWS_AS(
      ohmm::batch_em_run(init, {0.5, 0.5}, ys, -1, EStepMode::forward_backward),
      ConfigError);
  CHECK_THROWS_AS(ohmm::e_step_fb(init, {0.5, 0.5}, {}), ConfigError);
  HmmParams zero_v = init;
  zero_v.v = 0.0;
  CHECK_THROWS_AS(
      ohmm::batch_em_run(zero_v, {0.5, 0.5}, ys, 1, EStepMode::forward_backward),
      ConfigError);
}
