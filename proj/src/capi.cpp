#include "ohmm.h"

#include <chrono>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "ohmm/analysis.hpp"
#include "ohmm/batch_em.hpp"
#include "ohmm/errors.hpp"
#include "ohmm/io.hpp"

struct ohmm_model {
  ohmm::HmmParams params;
};

struct ohmm_trajectory {
  ohmm::Trajectory traj;
};

struct ohmm_em_trace {
  ohmm::EmTrace trace;
  int m = 0;
};

struct ohmm_online_trace {
  ohmm::EstimateTrace trace;
  int m = 0;
};

struct ohmm_fisher {
  ohmm::FisherEstimate est;
};

namespace {

thread_local std::string g_last_error;

int fail(int code, const char* what) {
  g_last_error = what ? what : "unknown error";
  return code;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
int guarded(Fn&& fn) {
  try {
    fn();
    return OHMM_OK;
  } catch (const ohmm::ConfigError& e) {
    return fail(OHMM_ERR_CONFIG, e.what());
  } catch (const ohmm::NumericalError& e) {
    return fail(OHMM_ERR_NUMERIC, e.what());
  } catch (const std::exception& e) {
    return fail(OHMM_ERR_FAIL, e.what());
  } catch (...) {
    return fail(OHMM_ERR_FAIL, "unknown error");
  }
}

std::vector<double> nu_or_uniform(const double* nu, int m) {
  if (!nu) return ohmm::uniform_distribution(m);
  return std::vector<double>(nu, nu + m);
}

ohmm::RunConfig make_run_config(const ohmm_model* init, const double* nu,
                                const ohmm_online_config* config) {
  if (!config) throw ohmm::ConfigError("online configuration is required");
  ohmm::RunConfig rc;
  rc.theta0 = init->params;
  if (nu) rc.nu = std::vector<double>(nu, nu + init->params.m);
  rc.schedule = (config->schedule_kind == OHMM_SCHEDULE_CONSTANT)
                    ? ohmm::StepSchedule::constant(config->gamma_constant)
                    : ohmm::StepSchedule::power(config->gamma_exponent);
  rc.n_min = config->n_min;
  rc.n_avg = config->n_avg;
  return rc;
}

void copy_params(const ohmm::HmmParams& p, double* q, double* mu, double* v) {
  if (q) std::memcpy(q, p.q.data(), p.q.size() * sizeof(double));
  if (mu) std::memcpy(mu, p.mu.data(), p.mu.size() * sizeof(double));
  if (v) *v = p.v;
}

template <typename Fn>
double best_of(int repetitions, Fn&& fn) {
  if (repetitions < 1) throw ohmm::ConfigError("repetition count must be >= 1");
  double best = std::numeric_limits<double>::infinity();
  for (int r = 0; r < repetitions; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double>(t1 - t0).count());
  }
  return best;
}

}  // namespace

extern "C" {

const char* ohmm_version(void) { return "0.1.0"; }

const char* ohmm_last_error(void) { return g_last_error.c_str(); }

uint64_t ohmm_derive_seed(uint64_t master, uint64_t index) {
  return ohmm::derive_seed(master, index);
}

int ohmm_model_new(int m, const double* q, const double* mu, double v,
                   ohmm_model** out) {
  if (!out || !q || !mu) return fail(OHMM_ERR_CONFIG, "null argument");
  *out = nullptr;
  return guarded([&] {
    ohmm::HmmParams params(m, std::vector<double>(q, q + static_cast<size_t>(m) * m),
                           std::vector<double>(mu, mu + m), v);
    *out = new ohmm_model{std::move(params)};
  });
}

void ohmm_model_free(ohmm_model* model) { delete model; }

int ohmm_model_state_count(const ohmm_model* model) {
  return model ? model->params.m : 0;
}

int ohmm_model_get(const ohmm_model* model, double* q, double* mu, double* v) {
  if (!model) return fail(OHMM_ERR_CONFIG, "null model");
  copy_params(model->params, q, mu, v);
  return OHMM_OK;
}

int ohmm_stationary(const ohmm_model* model, double* pi) {
  if (!model || !pi) return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] {
    const std::vector<double> p = ohmm::stationary_distribution(model->params);
    std::memcpy(pi, p.data(), p.size() * sizeof(double));
  });
}

int ohmm_simulate(const ohmm_model* model, long n, const double* nu, uint64_t seed,
                  ohmm_trajectory** out) {
  if (!model || !out) return fail(OHMM_ERR_CONFIG, "null argument");
  *out = nullptr;
  return guarded([&] {
    const std::vector<double> start =
        nu ? std::vector<double>(nu, nu + model->params.m)
           : ohmm::stationary_distribution(model->params);
    *out = new ohmm_trajectory{ohmm::simulate(model->params, n, start, seed)};
  });
}

long ohmm_trajectory_length(const ohmm_trajectory* traj) {
  return traj ? traj->traj.length() : 0;
}

const int* ohmm_trajectory_states(const ohmm_trajectory* traj) {
  return traj ? traj->traj.states.data() : nullptr;
}

const double* ohmm_trajectory_observations(const ohmm_trajectory* traj) {
  return traj ? traj->traj.observations.data() : nullptr;
}

int ohmm_trajectory_write_csv(const ohmm_trajectory* traj, const char* path) {
  if (!traj || !path) return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] { ohmm::write_trajectory_csv(traj->traj, path); });
}

int ohmm_trajectory_read_csv(const char* path, ohmm_trajectory** out) {
  if (!path || !out) return fail(OHMM_ERR_CONFIG, "null argument");
  *out = nullptr;
  return guarded([&] { *out = new ohmm_trajectory{ohmm::read_trajectory_csv(path)}; });
}

void ohmm_trajectory_free(ohmm_trajectory* traj) { delete traj; }

int ohmm_loglik(const ohmm_model* model, const double* nu, const double* ys, long len,
                double* out) {
  if (!model || !ys || !out) return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] {
    *out = ohmm::loglikelihood(model->params, nu_or_uniform(nu, model->params.m),
                               std::vector<double>(ys, ys + len));
  });
}

int ohmm_bayes_error(const ohmm_model* model, const int* states, const double* ys,
                     long len, double* filtered, double* smoothed) {
  if (!model || !states || !ys || !filtered)
    return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] {
    ohmm::Trajectory traj;
    traj.states.assign(states, states + len);
    traj.observations.assign(ys, ys + len);
    *filtered = ohmm::bayes_error_rate(model->params, traj);
    if (smoothed) *smoothed = ohmm::smoothed_error_rate(model->params, traj);
  });
}

int ohmm_batch_em(const ohmm_model* init, const double* nu, const double* ys, long len,
                  int iters, int mode, ohmm_em_trace** out) {
  if (!init || !ys || !out) return fail(OHMM_ERR_CONFIG, "null argument");
  *out = nullptr;
  return guarded([&] {
    if (mode != OHMM_BATCH_FB && mode != OHMM_BATCH_RECURSIVE)
      throw ohmm::ConfigError("unknown E-step mode");
    ohmm::EmTrace trace = ohmm::batch_em_run(
        init->params, nu_or_uniform(nu, init->params.m),
        std::vector<double>(ys, ys + len), iters,
        mode == OHMM_BATCH_FB ? ohmm::EStepMode::forward_backward
                              : ohmm::EStepMode::recursive);
    *out = new ohmm_em_trace{std::move(trace), init->params.m};
  });
}

long ohmm_em_trace_rows(const ohmm_em_trace* trace) {
  return trace ? static_cast<long>(trace->trace.iterates.size()) : 0;
}

int ohmm_em_trace_get(const ohmm_em_trace* trace, long row, double* loglik, double* q,
                      double* mu, double* v) {
  if (!trace) return fail(OHMM_ERR_CONFIG, "null trace");
  if (row < 0 || row >= static_cast<long>(trace->trace.iterates.size()))
    return fail(OHMM_ERR_CONFIG, "trace row out of range");
  const ohmm::EmIterate& it = trace->trace.iterates[row];
  if (loglik) *loglik = it.loglik;
  copy_params(it.params, q, mu, v);
  return OHMM_OK;
}

int ohmm_em_trace_write_csv(const ohmm_em_trace* trace, const char* path) {
  if (!trace || !path) return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] { ohmm::write_em_trace_csv(trace->trace, trace->m, path); });
}

void ohmm_em_trace_free(ohmm_em_trace* trace) { delete trace; }

int ohmm_time_em_iteration(const ohmm_model* init, const double* nu, const double* ys,
                           long len, int mode, int repetitions, double* seconds) {
  if (!init || !ys || !seconds) return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] {
    if (mode != OHMM_BATCH_FB && mode != OHMM_BATCH_RECURSIVE)
      throw ohmm::ConfigError("unknown E-step mode");
    const std::vector<double> start = nu_or_uniform(nu, init->params.m);
    const std::vector<double> record(ys, ys + len);
    *seconds = best_of(repetitions, [&] {
      ohmm::SummedStats stats =
          (mode == OHMM_BATCH_FB)
              ? ohmm::e_step_fb(init->params, start, record)
              : ohmm::e_step_recursive(init->params, start, record);
      ohmm::HmmParams next = ohmm::m_step(stats);
      (void)next;
    });
  });
}

int ohmm_online_em(const ohmm_model* init, const double* nu, const double* ys, long len,
                   const ohmm_online_config* config, const long* checkpoints,
                   int n_checkpoints, ohmm_online_trace** out) {
  if (!init || !ys || !out) return fail(OHMM_ERR_CONFIG, "null argument");
  if (n_checkpoints > 0 && !checkpoints)
    return fail(OHMM_ERR_CONFIG, "null checkpoint array");
  *out = nullptr;
  return guarded([&] {
    const ohmm::RunConfig rc = make_run_config(init, nu, config);
    ohmm::EstimateTrace trace =
        ohmm::run_online(rc, std::vector<double>(ys, ys + len),
                         std::vector<long>(checkpoints, checkpoints + n_checkpoints));
    *out = new ohmm_online_trace{std::move(trace), init->params.m};
  });
}

long ohmm_online_trace_rows(const ohmm_online_trace* trace) {
  return trace ? static_cast<long>(trace->trace.rows.size()) : 0;
}

int ohmm_online_trace_state_count(const ohmm_online_trace* trace) {
  return trace ? trace->m : 0;
}

int ohmm_online_trace_get(const ohmm_online_trace* trace, long row, long* n, double* q,
                          double* mu, double* v, int* has_avg, double* q_avg,
                          double* mu_avg, double* v_avg, long* skips) {
  if (!trace) return fail(OHMM_ERR_CONFIG, "null trace");
  if (row < 0 || row >= static_cast<long>(trace->trace.rows.size()))
    return fail(OHMM_ERR_CONFIG, "trace row out of range");
  const ohmm::EstimateRow& r = trace->trace.rows[row];
  if (n) *n = r.n;
  copy_params(r.theta, q, mu, v);
  if (has_avg) *has_avg = r.has_avg ? 1 : 0;
  if (r.has_avg) copy_params(r.theta_avg, q_avg, mu_avg, v_avg);
  if (skips) *skips = r.skips;
  return OHMM_OK;
}

int ohmm_online_trace_write_csv(const ohmm_online_trace* trace, const char* path) {
  if (!trace || !path) return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] { ohmm::write_estimate_trace_csv(trace->trace, trace->m, path); });
}

void ohmm_online_trace_free(ohmm_online_trace* trace) { delete trace; }

int ohmm_time_online_run(const ohmm_model* init, const double* nu, const double* ys,
                         long len, const ohmm_online_config* config, int repetitions,
                         double* seconds) {
  if (!init || !ys || !seconds) return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] {
    const ohmm::RunConfig rc = make_run_config(init, nu, config);
    const std::vector<double> record(ys, ys + len);
    *seconds = best_of(repetitions, [&] {
      ohmm::OnlineState state = ohmm::online_init(rc, record[0]);
      for (long t = 1; t < len; ++t) ohmm::online_step_inplace(state, rc, record[t]);
    });
  });
}

int ohmm_score(const ohmm_model* model, const double* nu, const double* ys, long len,
               double* dq, double* dmu, double* dv) {
  if (!model || !ys) return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] {
    const ohmm::ScoreVector sc =
        ohmm::score(model->params, nu_or_uniform(nu, model->params.m),
                    std::vector<double>(ys, ys + len));
    if (dq) std::memcpy(dq, sc.d_q.data(), sc.d_q.size() * sizeof(double));
    if (dmu) std::memcpy(dmu, sc.d_mu.data(), sc.d_mu.size() * sizeof(double));
    if (dv) *dv = sc.d_v;
  });
}

int ohmm_fisher_estimate(const ohmm_model* model, int sequences, long length,
                         uint64_t seed, int workers, ohmm_fisher** out) {
  if (!model || !out) return fail(OHMM_ERR_CONFIG, "null argument");
  *out = nullptr;
  return guarded([&] {
    *out = new ohmm_fisher{
        ohmm::fisher_information(model->params, sequences, length, seed, workers)};
  });
}

int ohmm_fisher_dim(const ohmm_fisher* est) { return est ? est->est.dim : 0; }

const double* ohmm_fisher_matrix(const ohmm_fisher* est) {
  return est ? est->est.information.data() : nullptr;
}

int ohmm_fisher_sds(const ohmm_fisher* est, double* out) {
  if (!est || !out) return fail(OHMM_ERR_CONFIG, "null argument");
  if (est->est.asymptotic_sd.empty())
    return fail(OHMM_ERR_NUMERIC, "information matrix is singular");
  std::memcpy(out, est->est.asymptotic_sd.data(),
              est->est.asymptotic_sd.size() * sizeof(double));
  return OHMM_OK;
}

int ohmm_fisher_trace_sds(const ohmm_fisher* est, double* out) {
  if (!est || !out) return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] {
    const std::vector<double> sds = ohmm::trace_column_sds(est->est);
    std::memcpy(out, sds.data(), sds.size() * sizeof(double));
  });
}

int ohmm_fisher_write(const ohmm_fisher* est, const char* csv_path,
                      const char* json_path) {
  if (!est) return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] {
    if (csv_path) ohmm::write_fisher_csv(est->est, csv_path);
    if (json_path) ohmm::write_fisher_json(est->est, json_path);
  });
}

void ohmm_fisher_free(ohmm_fisher* est) { delete est; }

int ohmm_scaled_trace(const ohmm_online_trace* trace, const ohmm_model* truth,
                      const ohmm_fisher* fisher, int use_avg, double* out) {
  if (!trace || !truth || !fisher || !out) return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] {
    const ohmm::ScaledTrace scaled =
        ohmm::center_and_scale(trace->trace, truth->params, fisher->est);
    const size_t width = 2 * static_cast<size_t>(truth->params.m) + 1;
    for (size_t r = 0; r < scaled.n.size(); ++r) {
      const std::vector<double>& src = use_avg ? scaled.avg_values[r] : scaled.values[r];
      for (size_t k = 0; k < width; ++k)
        out[r * width + k] =
            k < src.size() ? src[k] : std::numeric_limits<double>::quiet_NaN();
    }
  });
}

int ohmm_check_lemma_bound(int m, const double* alpha1, const double* alpha2,
                           const double* beta1, const double* beta2, const double* q,
                           double epsilon, double* lhs, double* rhs, int* pass) {
  if (!alpha1 || !alpha2 || !beta1 || !beta2 || !q)
    return fail(OHMM_ERR_CONFIG, "null argument");
  return guarded([&] {
    const ohmm::BoundCheck check = ohmm::check_lemma_bound(
        std::vector<double>(alpha1, alpha1 + m), std::vector<double>(alpha2, alpha2 + m),
        std::vector<double>(beta1, beta1 + m), std::vector<double>(beta2, beta2 + m),
        std::vector<double>(q, q + static_cast<size_t>(m) * m), m, epsilon);
    if (lhs) *lhs = check.lhs;
    if (rhs) *rhs = check.rhs;
    if (pass) *pass = check.pass ? 1 : 0;
  });
}

}  // extern "C"
