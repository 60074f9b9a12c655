#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "ohmm.h"

#include "cli_config.hpp"
#include "cli_util.hpp"

namespace {

struct CliFailure {
  int exit_code;
  std::string message;
};

int status_to_exit(int status) {
  switch (status) {
    case OHMM_OK:
      return 0;
    case OHMM_ERR_CONFIG:
      return 2;
    case OHMM_ERR_NUMERIC:
      return 3;
    default:
      return 1;
  }
}

void require_ok(int status) {
  if (status != OHMM_OK) throw CliFailure{status_to_exit(status), ohmm_last_error()};
}

struct Model {
  ohmm_model* ptr = nullptr;
  Model() = default;
  explicit Model(const ModelSpec& spec) {
    require_ok(ohmm_model_new(spec.m, spec.q.data(), spec.mu.data(), spec.v, &ptr));
  }
  Model(Model&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
  ~Model() { ohmm_model_free(ptr); }
};

struct Record {
  ohmm_trajectory* ptr = nullptr;
  Record() = default;
  Record(Record&& other) noexcept : ptr(other.ptr) { other.ptr = nullptr; }
  Record& operator=(Record&& other) noexcept {
    std::swap(ptr, other.ptr);
    return *this;
  }
  Record(const Record&) = delete;
  Record& operator=(const Record&) = delete;
  ~Record() { ohmm_trajectory_free(ptr); }

  long length() const { return ohmm_trajectory_length(ptr); }
  const double* observations() const { return ohmm_trajectory_observations(ptr); }
  const int* states() const { return ohmm_trajectory_states(ptr); }
};

Record simulate_record(const Model& model, long n, std::uint64_t seed) {
  Record record;
  require_ok(ohmm_simulate(model.ptr, n, nullptr, seed, &record.ptr));
  return record;
}

Record read_record(const std::string& path) {
  Record record;
  require_ok(ohmm_trajectory_read_csv(path.c_str(), &record.ptr));
  return record;
}

void ensure_out_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw CliFailure{1, "cannot create output directory " + dir};
}

std::string out_path(const ExperimentConfig& config, const std::string& name) {
  return (std::filesystem::path(config.out_dir) / name).string();
}

ohmm_online_config online_config_of(const ExperimentConfig& config, bool averaged) {
  ohmm_online_config oc;
  if (config.gamma_constant > 0.0) {
    oc.schedule_kind = OHMM_SCHEDULE_CONSTANT;
    oc.gamma_constant = config.gamma_constant;
    oc.gamma_exponent = 0.0;
  } else {
    oc.schedule_kind = OHMM_SCHEDULE_POWER;
    oc.gamma_exponent = config.gamma_exponent;
    oc.gamma_constant = 0.0;
  }
  oc.n_min = config.n_min;
  oc.n_avg = averaged ? config.n_avg : -1;
  return oc;
}

std::string replicate_name(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "replicate_%03d", i);
  return buf;
}

// Diagonal transition entries, means, and the variance of one trace row.
std::vector<double> pack_row(int m, const double* q, const double* mu, double v) {
  std::vector<double> row;
  row.reserve(2 * m + 1);
  for (int i = 0; i < m; ++i) row.push_back(q[i * m + i]);
  for (int i = 0; i < m; ++i) row.push_back(mu[i]);
  row.push_back(v);
  return row;
}

int cmd_simulate(const ExperimentConfig& config, long n) {
  ensure_out_dir(config.out_dir);
  const Model truth(config.truth);
  for (int i = 0; i < config.replications; ++i) {
    const Record record =
        simulate_record(truth, n, ohmm_derive_seed(config.seed, i));
    char name[48];
    std::snprintf(name, sizeof name, "trajectory_%03d.csv", i);
    const std::string path = out_path(config, name);
    require_ok(ohmm_trajectory_write_csv(record.ptr, path.c_str()));
    std::cout << path << "\n";
  }
  return 0;
}

int cmd_loglik(const ExperimentConfig& config, const std::string& data_path,
               bool under_init) {
  const Model model(under_init ? config.init : config.truth);
  const Record record = read_record(data_path);
  double ll = 0.0;
  require_ok(
      ohmm_loglik(model.ptr, nullptr, record.observations(), record.length(), &ll));
  std::cout << "loglik " << format_double(ll) << "\n";
  return 0;
}

int cmd_batch_em(const ExperimentConfig& config, const std::string& data_path, long n,
                 const std::string& mode_name) {
  ensure_out_dir(config.out_dir);
  const Model init(config.init);
  Record record;
  if (data_path.empty()) {
    const Model truth(config.truth);
    record = simulate_record(truth, n, ohmm_derive_seed(config.seed, 0));
  } else {
    record = read_record(data_path);
  }
  const int mode = (mode_name == "recursive") ? OHMM_BATCH_RECURSIVE : OHMM_BATCH_FB;

  ohmm_em_trace* trace = nullptr;
  require_ok(ohmm_batch_em(init.ptr, nullptr, record.observations(), record.length(),
                           config.iters, mode, &trace));
  const std::string path = out_path(config, "em_trace.csv");
  const int status = ohmm_em_trace_write_csv(trace, path.c_str());
  const long rows = ohmm_em_trace_rows(trace);
  double ll = 0.0;
  std::vector<double> q(static_cast<size_t>(config.init.m) * config.init.m);
  std::vector<double> mu(config.init.m);
  double v = 0.0;
  ohmm_em_trace_get(trace, rows - 1, &ll, q.data(), mu.data(), &v);
  ohmm_em_trace_free(trace);
  require_ok(status);

  std::cout << path << "\n";
  std::cout << "final loglik " << format_double(ll) << "\n";
  const std::vector<std::string> labels = param_labels(config.init.m, "");
  const std::vector<double> row = pack_row(config.init.m, q.data(), mu.data(), v);
  for (size_t k = 0; k < labels.size(); ++k)
    std::cout << labels[k] << " " << format_double(row[k]) << "\n";
  return 0;
}

int cmd_online_em(const ExperimentConfig& config, const std::string& data_path, long n) {
  ensure_out_dir(config.out_dir);
  const Model init(config.init);
  Record record;
  if (data_path.empty()) {
    const Model truth(config.truth);
    record = simulate_record(truth, n, ohmm_derive_seed(config.seed, 0));
  } else {
    record = read_record(data_path);
  }
  const bool averaged = config.method == Method::online_averaged;
  const ohmm_online_config oc = online_config_of(config, averaged);

  ohmm_online_trace* trace = nullptr;
  require_ok(ohmm_online_em(init.ptr, nullptr, record.observations(), record.length(),
                            &oc, config.lengths.data(),
                            static_cast<int>(config.lengths.size()), &trace));
  const std::string path = out_path(config, "online_trace.csv");
  const int status = ohmm_online_trace_write_csv(trace, path.c_str());
  const long rows = ohmm_online_trace_rows(trace);
  const int m = config.init.m;
  long last_n = 0, skips = 0;
  int has_avg = 0;
  std::vector<double> q(static_cast<size_t>(m) * m), mu(m), q_avg(q.size()), mu_avg(m);
  double v = 0.0, v_avg = 0.0;
  ohmm_online_trace_get(trace, rows - 1, &last_n, q.data(), mu.data(), &v, &has_avg,
                        q_avg.data(), mu_avg.data(), &v_avg, &skips);
  ohmm_online_trace_free(trace);
  require_ok(status);

  std::cout << path << "\n";
  std::cout << "n " << last_n << " skips " << skips << "\n";
  const std::vector<std::string> labels = param_labels(m, "");
  const std::vector<double> row = pack_row(m, q.data(), mu.data(), v);
  for (size_t k = 0; k < labels.size(); ++k)
    std::cout << labels[k] << " " << format_double(row[k]) << "\n";
  if (has_avg) {
    const std::vector<std::string> avg_labels = param_labels(m, "_avg");
    const std::vector<double> avg_row = pack_row(m, q_avg.data(), mu_avg.data(), v_avg);
    for (size_t k = 0; k < avg_labels.size(); ++k)
      std::cout << avg_labels[k] << " " << format_double(avg_row[k]) << "\n";
  }
  return 0;
}

// One replicate of the study: filled by a worker, reduced sequentially.
struct ReplicateResult {
  bool ok = false;
  std::string error;
  // Batch: [length][iter][param].  Online: [checkpoint][param], and
  // avg[checkpoint][param] left empty before the averaging onset.
  std::vector<std::vector<std::vector<double>>> values;
  std::vector<std::vector<double>> avg_values;
};

void run_replicate_batch(const ExperimentConfig& config, int i, ReplicateResult& out) {
  const Model truth(config.truth);
  const Model init(config.init);
  const Record record =
      simulate_record(truth, config.lengths.back(), ohmm_derive_seed(config.seed, i));
  const int m = config.init.m;
  out.values.resize(config.lengths.size());
  for (size_t li = 0; li < config.lengths.size(); ++li) {
    ohmm_em_trace* trace = nullptr;
    require_ok(ohmm_batch_em(init.ptr, nullptr, record.observations(),
                             config.lengths[li] + 1, config.iters, OHMM_BATCH_FB,
                             &trace));
    const long rows = ohmm_em_trace_rows(trace);
    out.values[li].resize(rows);
    std::vector<double> q(static_cast<size_t>(m) * m), mu(m);
    double v = 0.0;
    for (long row = 0; row < rows; ++row) {
      ohmm_em_trace_get(trace, row, nullptr, q.data(), mu.data(), &v);
      out.values[li][row] = pack_row(m, q.data(), mu.data(), v);
    }
    char name[64];
    std::snprintf(name, sizeof name, "%s_n%ld.csv", replicate_name(i).c_str(),
                  config.lengths[li]);
    const int status = ohmm_em_trace_write_csv(trace, out_path(config, name).c_str());
    ohmm_em_trace_free(trace);
    require_ok(status);
  }
  out.ok = true;
}

void run_replicate_online(const ExperimentConfig& config, int i, ReplicateResult& out) {
  const Model truth(config.truth);
  const Model init(config.init);
  const Record record =
      simulate_record(truth, config.lengths.back(), ohmm_derive_seed(config.seed, i));
  const bool averaged = config.method == Method::online_averaged;
  const ohmm_online_config oc = online_config_of(config, averaged);

  ohmm_online_trace* trace = nullptr;
  require_ok(ohmm_online_em(init.ptr, nullptr, record.observations(), record.length(),
                            &oc, config.lengths.data(),
                            static_cast<int>(config.lengths.size()), &trace));
  const long rows = ohmm_online_trace_rows(trace);
  const int m = config.init.m;
  out.values.resize(1);
  out.values[0].resize(rows);
  out.avg_values.resize(rows);
  std::vector<double> q(static_cast<size_t>(m) * m), mu(m), q_avg(q.size()), mu_avg(m);
  double v = 0.0, v_avg = 0.0;
  for (long row = 0; row < rows; ++row) {
    long n = 0, skips = 0;
    int has_avg = 0;
    ohmm_online_trace_get(trace, row, &n, q.data(), mu.data(), &v, &has_avg,
                          q_avg.data(), mu_avg.data(), &v_avg, &skips);
    out.values[0][row] = pack_row(m, q.data(), mu.data(), v);
    if (has_avg) out.avg_values[row] = pack_row(m, q_avg.data(), mu_avg.data(), v_avg);
  }
  const int status = ohmm_online_trace_write_csv(
      trace, out_path(config, replicate_name(i) + ".csv").c_str());
  ohmm_online_trace_free(trace);
  require_ok(status);
  out.ok = true;
}

int cmd_experiment(const ExperimentConfig& config) {
  ensure_out_dir(config.out_dir);
  const int reps = config.replications;
  std::vector<ReplicateResult> results(reps);

  int n_workers = config.workers > 0
                      ? config.workers
                      : static_cast<int>(std::thread::hardware_concurrency());
  if (n_workers < 1) n_workers = 1;
  if (n_workers > reps) n_workers = reps;

  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (int w = 0; w < n_workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= reps) return;
        try {
          if (config.method == Method::batch)
            run_replicate_batch(config, i, results[i]);
          else
            run_replicate_online(config, i, results[i]);
        } catch (const CliFailure& e) {
          results[i].ok = false;
          results[i].error = e.message;
        } catch (const std::exception& e) {
          results[i].ok = false;
          results[i].error = e.what();
        }
      }
    });
  }
  for (auto& th : pool) th.join();

  std::ostringstream status;
  status << "replicate,seed,status\n";
  int failures = 0;
  for (int i = 0; i < reps; ++i) {
    status << i << ',' << ohmm_derive_seed(config.seed, i) << ',';
    if (results[i].ok) {
      status << "ok\n";
    } else {
      status << "failed: " << results[i].error << "\n";
      ++failures;
    }
  }
  write_text_atomic(out_path(config, "replicates.csv"), status.str());

  const std::vector<std::string> labels = param_labels(config.init.m, "");
  std::ostringstream summary;
  summary << "n,iter,parameter,count,median,q25,q75,mean,sd\n";
  auto emit = [&](long n, const std::string& iter, const std::string& parameter,
                  const std::vector<double>& column) {
    if (column.empty()) return;
    const ColumnSummary s = summarize(column);
    summary << n << ',' << iter << ',' << parameter << ',' << s.count << ','
            << format_double(s.median) << ',' << format_double(s.q25) << ','
            << format_double(s.q75) << ',' << format_double(s.mean) << ','
            << format_double(s.sd) << "\n";
  };

  if (config.method == Method::batch) {
    for (size_t li = 0; li < config.lengths.size(); ++li)
      for (int iter = 0; iter <= config.iters; ++iter)
        for (size_t p = 0; p < labels.size(); ++p) {
          std::vector<double> column;
          for (int i = 0; i < reps; ++i)
            if (results[i].ok) column.push_back(results[i].values[li][iter][p]);
          emit(config.lengths[li], std::to_string(iter), labels[p], column);
        }
  } else {
    const std::vector<std::string> avg_labels = param_labels(config.init.m, "_avg");
    for (size_t ci = 0; ci < config.lengths.size(); ++ci) {
      for (size_t p = 0; p < labels.size(); ++p) {
        std::vector<double> column;
        for (int i = 0; i < reps; ++i)
          if (results[i].ok) column.push_back(results[i].values[0][ci][p]);
        emit(config.lengths[ci], "", labels[p], column);
      }
      for (size_t p = 0; p < avg_labels.size(); ++p) {
        std::vector<double> column;
        for (int i = 0; i < reps; ++i)
          if (results[i].ok && !results[i].avg_values[ci].empty())
            column.push_back(results[i].avg_values[ci][p]);
        emit(config.lengths[ci], "", avg_labels[p], column);
      }
    }
  }
  write_text_atomic(out_path(config, "summary.csv"), summary.str());

  std::cout << "method " << method_name(config.method) << "\n";
  std::cout << "replications " << reps << " failures " << failures << "\n";
  std::cout << out_path(config, "summary.csv") << "\n";
  return 0;
}

int cmd_timing(const ExperimentConfig& config, long n, int repetitions) {
  ensure_out_dir(config.out_dir);
  const Model truth(config.truth);
  const Model init(config.init);
  const Record record = simulate_record(truth, n, ohmm_derive_seed(config.seed, 0));

  double online_s = 0.0, recursive_s = 0.0, fb_s = 0.0;
  const ohmm_online_config oc = online_config_of(config, false);
  require_ok(ohmm_time_online_run(init.ptr, nullptr, record.observations(),
                                  record.length(), &oc, repetitions, &online_s));
  require_ok(ohmm_time_em_iteration(init.ptr, nullptr, record.observations(),
                                    record.length(), OHMM_BATCH_RECURSIVE, repetitions,
                                    &recursive_s));
  require_ok(ohmm_time_em_iteration(init.ptr, nullptr, record.observations(),
                                    record.length(), OHMM_BATCH_FB, repetitions,
                                    &fb_s));

  std::ostringstream out;
  out << "method,seconds\n";
  out << "online-pass," << format_double(online_s) << "\n";
  out << "batch-recursive-iteration," << format_double(recursive_s) << "\n";
  out << "batch-fb-iteration," << format_double(fb_s) << "\n";
  write_text_atomic(out_path(config, "timing.csv"), out.str());

  std::cout << "n " << n << " best of " << repetitions << "\n";
  std::cout << "online-pass " << format_double(online_s) << "\n";
  std::cout << "batch-recursive-iteration " << format_double(recursive_s) << "\n";
  std::cout << "batch-fb-iteration " << format_double(fb_s) << "\n";
  return 0;
}

int cmd_bayes_error(const ExperimentConfig& config, long n, bool with_smoothed) {
  ensure_out_dir(config.out_dir);
  const Model truth(config.truth);
  const Record record = simulate_record(truth, n, ohmm_derive_seed(config.seed, 0));
  double filtered = 0.0, smoothed = 0.0;
  require_ok(ohmm_bayes_error(truth.ptr, record.states(), record.observations(),
                              record.length(), &filtered,
                              with_smoothed ? &smoothed : nullptr));

  std::ostringstream out;
  out << "n,filtered" << (with_smoothed ? ",smoothed" : "") << "\n";
  out << n << ',' << format_double(filtered);
  if (with_smoothed) out << ',' << format_double(smoothed);
  out << "\n";
  write_text_atomic(out_path(config, "bayes_error.csv"), out.str());

  std::cout << "filtered " << format_double(filtered) << "\n";
  if (with_smoothed) std::cout << "smoothed " << format_double(smoothed) << "\n";
  return 0;
}

int cmd_fisher(const ExperimentConfig& config, int sequences, long length) {
  ensure_out_dir(config.out_dir);
  const Model truth(config.truth);
  ohmm_fisher* est = nullptr;
  require_ok(ohmm_fisher_estimate(truth.ptr, sequences, length, config.seed,
                                  config.workers, &est));
  const std::string csv = out_path(config, "fisher.csv");
  const std::string json = out_path(config, "fisher.json");
  const int status = ohmm_fisher_write(est, csv.c_str(), json.c_str());

  const int dim = ohmm_fisher_dim(est);
  std::vector<double> sds(dim);
  const int sds_status = ohmm_fisher_sds(est, sds.data());
  ohmm_fisher_free(est);
  require_ok(status);

  std::cout << csv << "\n" << json << "\n";
  if (sds_status == OHMM_OK) {
    std::cout << "asymptotic_sd";
    for (double s : sds) std::cout << ' ' << format_double(s);
    std::cout << "\n";
  } else {
    std::cout << "asymptotic_sd singular\n";
  }
  return 0;
}

int cmd_check_bounds(const ExperimentConfig& config, long draws) {
  ensure_out_dir(config.out_dir);
  const int ms[] = {2, 3, 5};
  long total_violations = 0;
  std::ostringstream out;
  out << "m,epsilon,draws,violations,max_gap\n";
  int cell = 0;
  for (int m : ms) {
    const double eps_grid[] = {0.05, 0.2, 1.0 / m};
    for (double eps : eps_grid) {
      std::mt19937_64 rng(ohmm_derive_seed(config.seed, cell++));
      std::exponential_distribution<double> expo(1.0);
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

      const long cell_draws = std::max(1L, draws / 9);
      long violations = 0;
      double max_gap = -1e300;
      for (long d = 0; d < cell_draws; ++d) {
        std::vector<double> q;
        q.reserve(static_cast<size_t>(m) * m);
        for (int i = 0; i < m; ++i) {
          const std::vector<double> row = prob_vector(eps);
          q.insert(q.end(), row.begin(), row.end());
        }
        const std::vector<double> a1 = prob_vector(0.0), a2 = prob_vector(0.0);
        const std::vector<double> b1 = prob_vector(0.0), b2 = prob_vector(0.0);
        double lhs = 0.0, rhs = 0.0;
        int pass = 0;
        require_ok(ohmm_check_lemma_bound(m, a1.data(), a2.data(), b1.data(), b2.data(),
                                          q.data(), eps, &lhs, &rhs, &pass));
        if (!pass) ++violations;
        max_gap = std::max(max_gap, lhs - rhs);
      }
      total_violations += violations;
      out << m << ',' << format_double(eps) << ',' << cell_draws << ',' << violations
          << ',' << format_double(max_gap) << "\n";
    }
  }
  write_text_atomic(out_path(config, "bounds.csv"), out.str());
  std::cout << "violations " << total_violations << "\n";
  std::cout << out_path(config, "bounds.csv") << "\n";
  return total_violations == 0 ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hidden Markov model estimation experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string preset, config_path, out_dir, data_path, mode_name = "fb";
  std::uint64_t seed = 0;
  int replications = 0, workers = -1, repetitions = 5, sequences = 100;
  long n_simulate = 10000, n_batch = 10000, n_online = 0, n_timing = 10000;
  long n_bayes = 1000000, fisher_length = 1000, draws = 100000;
  bool under_init = false, with_smoothed = false;

  auto* preset_opt = app.add_option("--preset", preset,
                                    "paper-batch, paper-online, or paper-averaged");
  auto* config_opt = app.add_option("--config", config_path, "JSON configuration file");
  auto* seed_opt = app.add_option("--seed", seed, "master seed");
  auto* reps_opt = app.add_option("--replications", replications, "replication count");
  auto* workers_opt = app.add_option("--workers", workers, "worker threads (0 = auto)");
  auto* out_opt = app.add_option("--out", out_dir, "output directory");

  CLI::App* simulate = app.add_subcommand("simulate", "write simulated trajectories");
  simulate->add_option("--n", n_simulate, "record length");

  CLI::App* loglik = app.add_subcommand("loglik", "log-likelihood of a trajectory file");
  loglik->add_option("--data", data_path, "trajectory CSV")->required();
  loglik->add_flag("--init", under_init, "evaluate under the initial model");

  int iters = 0;
  CLI::App* batch = app.add_subcommand("batch-em", "batch EM on one record");
  batch->add_option("--data", data_path, "trajectory CSV (simulated when absent)");
  batch->add_option("--n", n_batch, "record length when simulating");
  batch->add_option("--mode", mode_name, "fb or recursive")
      ->check(CLI::IsMember({"fb", "recursive"}));
  auto* iters_opt = batch->add_option("--iters", iters, "EM iterations");

  CLI::App* online = app.add_subcommand("online-em", "online EM on one record");
  online->add_option("--data", data_path, "trajectory CSV (simulated when absent)");
  online->add_option("--n", n_online, "record length when simulating");

  CLI::App* experiment =
      app.add_subcommand("experiment", "replicated study with summary statistics");

  CLI::App* timing = app.add_subcommand("timing", "wall-clock comparison of the methods");
  timing->add_option("--n", n_timing, "record length");
  timing->add_option("--repetitions", repetitions, "best-of repetitions");

  CLI::App* bayes = app.add_subcommand("bayes-error", "misclassification of the filter");
  bayes->add_option("--n", n_bayes, "record length");
  bayes->add_flag("--smoothed", with_smoothed, "also run the smoothed classifier");

  CLI::App* fisher = app.add_subcommand("fisher", "Monte Carlo information matrix");
  fisher->add_option("--sequences", sequences, "number of simulated sequences");
  fisher->add_option("--length", fisher_length, "observations per sequence");

  CLI::App* bounds = app.add_subcommand("check-bounds", "kernel-ratio bound sampling");
  bounds->add_option("--draws", draws, "total random draws");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    ExperimentConfig config = default_config();
    if (*preset_opt) apply_preset(config, preset);
    if (*config_opt) apply_config_file(config, config_path);
    if (*seed_opt) config.seed = seed;
    if (*reps_opt) config.replications = replications;
    if (*workers_opt) config.workers = workers;
    if (*out_opt) config.out_dir = out_dir;
    if (*iters_opt) config.iters = iters;
    config.validate();

    if (simulate->parsed()) return cmd_simulate(config, n_simulate);
    if (loglik->parsed()) return cmd_loglik(config, data_path, under_init);
    if (batch->parsed()) return cmd_batch_em(config, data_path, n_batch, mode_name);
    if (online->parsed()) {
      const long n = n_online > 0 ? n_online : config.lengths.back();
      return cmd_online_em(config, data_path, n);
    }
    if (experiment->parsed()) return cmd_experiment(config);
    if (timing->parsed()) return cmd_timing(config, n_timing, repetitions);
    if (bayes->parsed()) return cmd_bayes_error(config, n_bayes, with_smoothed);
    if (fisher->parsed()) return cmd_fisher(config, sequences, fisher_length);
    if (bounds->parsed()) return cmd_check_bounds(config, draws);
    std::cerr << "no subcommand\n";
    return 2;
  } catch (const CliFailure& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
