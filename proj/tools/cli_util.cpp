#include "cli_util.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace {

double quantile_sorted(const std::vector<double>& sorted, double p) {
  const size_t n = sorted.size();
  if (n == 1) return sorted[0];
  const double pos = p * static_cast<double>(n - 1);
  const size_t lo = static_cast<size_t>(pos);
  const size_t hi = std::min(lo + 1, n - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

}  // namespace

ColumnSummary summarize(std::vector<double> values) {
  if (values.empty()) throw std::runtime_error("cannot summarize an empty column");
  ColumnSummary out;
  out.count = static_cast<long>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  out.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - out.mean) * (v - out.mean);
  out.sd = values.size() > 1
               ? std::sqrt(ss / static_cast<double>(values.size() - 1))
               : 0.0;
  std::sort(values.begin(), values.end());
  out.median = quantile_sorted(values, 0.5);
  out.q25 = quantile_sorted(values, 0.25);
  out.q75 = quantile_sorted(values, 0.75);
  return out;
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
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

std::vector<std::string> param_labels(int m, const std::string& suffix) {
  std::vector<std::string> labels;
  for (int i = 1; i <= m; ++i)
    labels.push_back("q" + std::to_string(i) + std::to_string(i) + suffix);
  for (int i = 1; i <= m; ++i) labels.push_back("mu" + std::to_string(i) + suffix);
  labels.push_back("v" + suffix);
  return labels;
}
