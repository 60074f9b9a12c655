#ifndef OHMM_CLI_UTIL_HPP
#define OHMM_CLI_UTIL_HPP

#include <string>
#include <vector>

// Five-number summary of one replicate column.
struct ColumnSummary {
  long count = 0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation; 0 for a single value
};

// Quartiles by linear interpolation between order statistics.
ColumnSummary summarize(std::vector<double> values);

// Shortest exactly round-tripping decimal form.
std::string format_double(double x);

// Temporary file plus rename, so readers never observe partial output.
void write_text_atomic(const std::string& path, const std::string& content);

// Estimate column labels: q11..qmm, mu1..mum, v, optionally suffixed.
std::vector<std::string> param_labels(int m, const std::string& suffix);

#endif
