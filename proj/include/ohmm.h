/* C interface to the ohmm estimation core.
 *
 * All functions return a status code unless documented otherwise:
 *   OHMM_OK            success
 *   OHMM_ERR_FAIL      I/O or other runtime failure
 *   OHMM_ERR_CONFIG    invalid arguments or configuration
 *   OHMM_ERR_NUMERIC   numerical degeneracy
 * ohmm_last_error() describes the most recent failure on the calling thread.
 *
 * Objects are created behind opaque handles and released with the matching
 * _free function; handles are not shared between threads without external
 * synchronization.  State indices are 0-based here; serialized output uses
 * 1-based labels.
 */
#ifndef OHMM_H
#define OHMM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define OHMM_OK 0
#define OHMM_ERR_FAIL 1
#define OHMM_ERR_CONFIG 2
#define OHMM_ERR_NUMERIC 3

typedef struct ohmm_model ohmm_model;
typedef struct ohmm_trajectory ohmm_trajectory;
typedef struct ohmm_em_trace ohmm_em_trace;
typedef struct ohmm_online_trace ohmm_online_trace;
typedef struct ohmm_fisher ohmm_fisher;

const char* ohmm_version(void);
const char* ohmm_last_error(void);

/* Deterministic replicate seeds: splitmix64 of master + (index+1) * golden. */
uint64_t ohmm_derive_seed(uint64_t master, uint64_t index);

/* ---- model ---------------------------------------------------------- */

/* q: m*m row-major transition matrix (rows sum to 1), mu: m state means,
 * v: shared Gaussian noise variance. */
int ohmm_model_new(int m, const double* q, const double* mu, double v,
                   ohmm_model** out);
void ohmm_model_free(ohmm_model* model);
int ohmm_model_state_count(const ohmm_model* model);
/* Any destination may be NULL; q needs m*m doubles, mu m doubles. */
int ohmm_model_get(const ohmm_model* model, double* q, double* mu, double* v);
/* pi: m doubles. */
int ohmm_stationary(const ohmm_model* model, double* pi);

/* ---- trajectories ---------------------------------------------------- */

/* Simulates n+1 samples; nu may be NULL for the stationary distribution. */
int ohmm_simulate(const ohmm_model* model, long n, const double* nu, uint64_t seed,
                  ohmm_trajectory** out);
long ohmm_trajectory_length(const ohmm_trajectory* traj);
const int* ohmm_trajectory_states(const ohmm_trajectory* traj);
const double* ohmm_trajectory_observations(const ohmm_trajectory* traj);
int ohmm_trajectory_write_csv(const ohmm_trajectory* traj, const char* path);
int ohmm_trajectory_read_csv(const char* path, ohmm_trajectory** out);
void ohmm_trajectory_free(ohmm_trajectory* traj);

/* ---- filtering ------------------------------------------------------- */

/* nu may be NULL for uniform. */
int ohmm_loglik(const ohmm_model* model, const double* nu, const double* ys, long len,
                double* out);
/* Misclassification rates of the filtered and (optionally) smoothed state
 * estimates along a simulated trajectory; smoothed may be NULL to skip the
 * backward pass. */
int ohmm_bayes_error(const ohmm_model* model, const int* states, const double* ys,
                     long len, double* filtered, double* smoothed);

/* ---- batch EM -------------------------------------------------------- */

#define OHMM_BATCH_FB 0
#define OHMM_BATCH_RECURSIVE 1

/* Runs `iters` EM iterations from `init` (nu NULL for uniform); the trace
 * holds iters+1 rows of (parameters, exact log-likelihood). */
int ohmm_batch_em(const ohmm_model* init, const double* nu, const double* ys, long len,
                  int iters, int mode, ohmm_em_trace** out);
long ohmm_em_trace_rows(const ohmm_em_trace* trace);
/* Row `row`; destinations as in ohmm_model_get plus the log-likelihood. */
int ohmm_em_trace_get(const ohmm_em_trace* trace, long row, double* loglik, double* q,
                      double* mu, double* v);
int ohmm_em_trace_write_csv(const ohmm_em_trace* trace, const char* path);
void ohmm_em_trace_free(ohmm_em_trace* trace);

/* Seconds for one E-step plus M-step on the record, best of `repetitions`. */
int ohmm_time_em_iteration(const ohmm_model* init, const double* nu, const double* ys,
                           long len, int mode, int repetitions, double* seconds);

/* ---- online EM ------------------------------------------------------- */

#define OHMM_SCHEDULE_POWER 0
#define OHMM_SCHEDULE_CONSTANT 1

typedef struct ohmm_online_config {
  int schedule_kind;     /* OHMM_SCHEDULE_POWER or OHMM_SCHEDULE_CONSTANT */
  double gamma_exponent; /* power schedules: exponent in (0.5, 1] */
  double gamma_constant; /* constant schedules: value in (0, 1] */
  long n_min;            /* first parameter update (default 20) */
  long n_avg;            /* averaging onset; < 0 disables averaging */
} ohmm_online_config;

/* Folds the online recursion over ys, emitting rows at the requested
 * checkpoint indices plus the final index. */
int ohmm_online_em(const ohmm_model* init, const double* nu, const double* ys, long len,
                   const ohmm_online_config* config, const long* checkpoints,
                   int n_checkpoints, ohmm_online_trace** out);
long ohmm_online_trace_rows(const ohmm_online_trace* trace);
int ohmm_online_trace_state_count(const ohmm_online_trace* trace);
/* has_avg reports whether the averaged destinations were filled. */
int ohmm_online_trace_get(const ohmm_online_trace* trace, long row, long* n, double* q,
                          double* mu, double* v, int* has_avg, double* q_avg,
                          double* mu_avg, double* v_avg, long* skips);
int ohmm_online_trace_write_csv(const ohmm_online_trace* trace, const char* path);
void ohmm_online_trace_free(ohmm_online_trace* trace);

/* Seconds for one full online pass over the record, best of `repetitions`. */
int ohmm_time_online_run(const ohmm_model* init, const double* nu, const double* ys,
                         long len, const ohmm_online_config* config, int repetitions,
                         double* seconds);

/* ---- score, information, bounds -------------------------------------- */

/* Per-observation score in the chart dropping the last transition column.
 * dq: m*(m-1) doubles, dmu: m doubles; any destination may be NULL. */
int ohmm_score(const ohmm_model* model, const double* nu, const double* ys, long len,
               double* dq, double* dmu, double* dv);

/* Monte Carlo Fisher information from `sequences` simulated records of
 * `length` observations each; workers <= 0 uses the hardware count. */
int ohmm_fisher_estimate(const ohmm_model* model, int sequences, long length,
                         uint64_t seed, int workers, ohmm_fisher** out);
int ohmm_fisher_dim(const ohmm_fisher* est);
/* dim*dim information matrix, row-major. */
const double* ohmm_fisher_matrix(const ohmm_fisher* est);
/* dim asymptotic standard deviations; OHMM_ERR_NUMERIC when singular. */
int ohmm_fisher_sds(const ohmm_fisher* est, double* out);
/* Standard deviations for the 2m+1 trace columns (diagonal q, mu, v). */
int ohmm_fisher_trace_sds(const ohmm_fisher* est, double* out);
int ohmm_fisher_write(const ohmm_fisher* est, const char* csv_path,
                      const char* json_path);
void ohmm_fisher_free(ohmm_fisher* est);

/* sqrt(n)(estimate - truth)/sd for every trace row; `out` holds rows*(2m+1)
 * doubles.  use_avg selects the averaged estimates; rows without an average
 * are filled with NaN. */
int ohmm_scaled_trace(const ohmm_online_trace* trace, const ohmm_model* truth,
                      const ohmm_fisher* fisher, int use_avg, double* out);

/* Kernel-ratio contraction bound for one instance; alpha/beta are length-m
 * probability vectors, q an m*m kernel with entries >= epsilon. */
int ohmm_check_lemma_bound(int m, const double* alpha1, const double* alpha2,
                           const double* beta1, const double* beta2, const double* q,
                           double epsilon, double* lhs, double* rhs, int* pass);

#ifdef __cplusplus
}
#endif

#endif /* OHMM_H */
