#ifndef OHMM_CLI_CONFIG_HPP
#define OHMM_CLI_CONFIG_HPP

#include <cstdint>
#include <string>
#include <vector>

// Experiment setup shared by the subcommands.  Defaults reproduce the
// two-state Gaussian study regime; presets switch between the batch,
// online, and averaged protocols over those parameters.
struct ModelSpec {
  int m = 2;
  std::vector<double> q;   // m*m row-major
  std::vector<double> mu;  // m
  double v = 1.0;
};

enum class Method { batch, online, online_averaged };

struct ExperimentConfig {
  ModelSpec truth;
  ModelSpec init;
  Method method = Method::online;
  int replications = 20;
  std::vector<long> lengths = {500, 2000, 8000, 32000, 128000};
  int iters = 50;              // batch EM iterations
  double gamma_exponent = 0.6; // power schedule
  double gamma_constant = 0.0; // > 0 selects a constant schedule
  long n_min = 20;
  long n_avg = 8000;           // used by online_averaged only
  std::uint64_t seed = 0;
  int workers = 0;             // 0 picks the hardware count
  std::string out_dir = "out";

  // Throws std::runtime_error with a human-readable message on bad values.
  void validate() const;
};

ExperimentConfig default_config();

// Known presets: paper-batch, paper-online, paper-averaged.
void apply_preset(ExperimentConfig& config, const std::string& name);

// Merges a JSON document over `config`; unknown keys are an error.
void apply_config_file(ExperimentConfig& config, const std::string& path);

const char* method_name(Method method);

#endif
