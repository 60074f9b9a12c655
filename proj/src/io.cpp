#include "ohmm/io.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ohmm/errors.hpp"

namespace ohmm {

std::string format_real(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out << content;
    if (!out.flush()) throw std::runtime_error("write to " + tmp + " failed");
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("cannot rename " + tmp + " to " + path);
}

void write_trajectory_csv(const Trajectory& traj, const std::string& path) {
  std::ostringstream out;
  out << "t,state,y\n";
  for (long t = 0; t < traj.length(); ++t)
    out << t << ',' << traj.states[t] + 1 << ',' << format_real(traj.observations[t])
        << '\n';
  write_file_atomic(path, out.str());
}

Trajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError(path + ": empty trajectory file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t,state,y") throw ConfigError(path + ": expected header t,state,y");

  Trajectory traj;
  long expected_t = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    long t = 0;
    int state = 0;
    double y = 0.0;
    char trailing = 0;
    if (std::sscanf(line.c_str(), "%ld,%d,%lf%c", &t, &state, &y, &trailing) != 3)
      throw ConfigError(path + ": malformed trajectory row '" + line + "'");
    if (t != expected_t) throw ConfigError(path + ": time indices must be consecutive");
    if (state < 1) throw ConfigError(path + ": states are 1-based");
    traj.states.push_back(state - 1);
    traj.observations.push_back(y);
    ++expected_t;
  }
  if (traj.states.empty()) throw ConfigError(path + ": no samples");
  return traj;
}

namespace {

void append_param_header(std::ostringstream& out, int m, const char* suffix) {
  for (int i = 1; i <= m; ++i) out << ",q" << i << i << suffix;
  for (int i = 1; i <= m; ++i) out << ",mu" << i << suffix;
  out << ",v" << suffix;
}

void append_params(std::ostringstream& out, const HmmParams& p) {
  for (int i = 0; i < p.m; ++i) out << ',' << format_real(p.trans(i, i));
  for (int i = 0; i < p.m; ++i) out << ',' << format_real(p.mu[i]);
  out << ',' << format_real(p.v);
}

}  // namespace

void write_em_trace_csv(const EmTrace& trace, int m, const std::string& path) {
  std::ostringstream out;
  out << "iter,loglik";
  append_param_header(out, m, "");
  out << '\n';
  for (size_t k = 0; k < trace.iterates.size(); ++k) {
    out << k << ',' << format_real(trace.iterates[k].loglik);
    append_params(out, trace.iterates[k].params);
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_estimate_trace_csv(const EstimateTrace& trace, int m, const std::string& path) {
  std::ostringstream out;
  out << 'n';
  append_param_header(out, m, "");
  append_param_header(out, m, "_avg");
  out << ",skips\n";
  for (const EstimateRow& row : trace.rows) {
    out << row.n;
    append_params(out, row.theta);
    if (row.has_avg) {
      append_params(out, row.theta_avg);
    } else {
      for (int k = 0; k < 2 * m + 1; ++k) out << ',';
    }
    out << ',' << row.skips << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_fisher_csv(const FisherEstimate& est, const std::string& path) {
  std::ostringstream out;
  for (int i = 0; i < est.dim; ++i) {
    for (int j = 0; j < est.dim; ++j) {
      if (j) out << ',';
      out << format_real(est.information[static_cast<size_t>(i) * est.dim + j]);
    }
    out << '\n';
  }
  write_file_atomic(path, out.str());
}

void write_fisher_json(const FisherEstimate& est, const std::string& path) {
  nlohmann::json j;
  j["m"] = est.m;
  j["dim"] = est.dim;
  j["n_sequences"] = est.n_sequences;
  j["sequence_length"] = est.sequence_length;
  if (est.asymptotic_sd.empty())
    j["asymptotic_sd"] = nullptr;
  else
    j["asymptotic_sd"] = est.asymptotic_sd;
  write_file_atomic(path, j.dump(2) + "\n");
}

}  // namespace ohmm
