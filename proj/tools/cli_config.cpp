#include "cli_config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

using nlohmann::json;

namespace {

ModelSpec study_truth() {
  ModelSpec spec;
  spec.m = 2;
  spec.q = {0.95, 0.05, 0.3, 0.7};
  spec.mu = {0.0, 1.0};
  spec.v = 0.5;
  return spec;
}

ModelSpec study_init() {
  ModelSpec spec;
  spec.m = 2;
  spec.q = {0.7, 0.3, 0.5, 0.5};
  spec.mu = {-0.5, 0.5};
  spec.v = 2.0;
  return spec;
}

ModelSpec parse_model(const json& j, const std::string& label) {
  ModelSpec spec;
  if (!j.is_object()) throw std::runtime_error(label + " must be an object");
  for (const auto& item : j.items())
    if (item.key() != "q" && item.key() != "mu" && item.key() != "v")
      throw std::runtime_error(label + ": unknown key '" + item.key() + "'");

  const json& q = j.at("q");
  if (!q.is_array() || q.empty() || !q[0].is_array())
    throw std::runtime_error(label + ".q must be an array of rows");
  spec.m = static_cast<int>(q.size());
  for (const json& row : q) {
    if (!row.is_array() || static_cast<int>(row.size()) != spec.m)
      throw std::runtime_error(label + ".q must be square");
    for (const json& entry : row) spec.q.push_back(entry.get<double>());
  }
  const json& mu = j.at("mu");
  if (!mu.is_array() || static_cast<int>(mu.size()) != spec.m)
    throw std::runtime_error(label + ".mu must hold one mean per state");
  for (const json& entry : mu) spec.mu.push_back(entry.get<double>());
  spec.v = j.at("v").get<double>();
  return spec;
}

Method parse_method(const std::string& name) {
  if (name == "batch") return Method::batch;
  if (name == "online") return Method::online;
  if (name == "online-averaged") return Method::online_averaged;
  throw std::runtime_error("unknown method '" + name +
                           "' (expected batch, online, or online-averaged)");
}

}  // namespace

const char* method_name(Method method) {
  switch (method) {
    case Method::batch:
      return "batch";
    case Method::online:
      return "online";
    case Method::online_averaged:
      return "online-averaged";
  }
  return "?";
}

ExperimentConfig default_config() {
  ExperimentConfig config;
  config.truth = study_truth();
  config.init = study_init();
  return config;
}

void apply_preset(ExperimentConfig& config, const std::string& name) {
  if (name == "paper-batch") {
    config.method = Method::batch;
    config.iters = 50;
    config.lengths = {500, 8000};
  } else if (name == "paper-online") {
    config.method = Method::online;
    config.gamma_exponent = 0.6;
    config.gamma_constant = 0.0;
    config.n_min = 20;
    config.lengths = {500, 2000, 8000, 32000, 128000};
  } else if (name == "paper-averaged") {
    config.method = Method::online_averaged;
    config.gamma_exponent = 0.6;
    config.gamma_constant = 0.0;
    config.n_min = 20;
    config.n_avg = 8000;
    config.lengths = {500, 2000, 8000, 32000, 128000};
  } else {
    throw std::runtime_error("unknown preset '" + name + "'");
  }
}

void apply_config_file(ExperimentConfig& config, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  if (!j.is_object()) throw std::runtime_error(path + ": config must be an object");

  static const std::set<std::string> known = {
      "truth", "init",  "method", "replications", "lengths", "iters",
      "gamma_exponent", "gamma_constant", "n_min", "n_avg", "seed",
      "workers", "out"};
  for (const auto& item : j.items())
    if (!known.count(item.key()))
      throw std::runtime_error(path + ": unknown key '" + item.key() + "'");

  if (j.count("truth")) config.truth = parse_model(j["truth"], "truth");
  if (j.count("init")) config.init = parse_model(j["init"], "init");
  if (j.count("method")) config.method = parse_method(j["method"].get<std::string>());
  if (j.count("replications")) config.replications = j["replications"].get<int>();
  if (j.count("lengths")) {
    config.lengths.clear();
    for (const json& entry : j["lengths"]) config.lengths.push_back(entry.get<long>());
  }
  if (j.count("iters")) config.iters = j["iters"].get<int>();
  if (j.count("gamma_exponent")) config.gamma_exponent = j["gamma_exponent"].get<double>();
  if (j.count("gamma_constant")) config.gamma_constant = j["gamma_constant"].get<double>();
  if (j.count("n_min")) config.n_min = j["n_min"].get<long>();
  if (j.count("n_avg")) config.n_avg = j["n_avg"].get<long>();
  if (j.count("seed")) config.seed = j["seed"].get<std::uint64_t>();
  if (j.count("workers")) config.workers = j["workers"].get<int>();
  if (j.count("out")) config.out_dir = j["out"].get<std::string>();
}

void ExperimentConfig::validate() const {
  if (truth.m < 1 || init.m < 1) throw std::runtime_error("models need at least one state");
  if (truth.m != init.m)
    throw std::runtime_error("truth and init must have the same number of states");
  if (replications < 1) throw std::runtime_error("replications must be >= 1");
  if (lengths.empty()) throw std::runtime_error("lengths must be nonempty");
  for (size_t k = 0; k < lengths.size(); ++k) {
    if (lengths[k] < 1) throw std::runtime_error("lengths must be >= 1");
    if (k > 0 && lengths[k] <= lengths[k - 1])
      throw std::runtime_error("lengths must be strictly increasing");
  }
  if (iters < 0) throw std::runtime_error("iters must be >= 0");
  if (gamma_constant < 0.0) throw std::runtime_error("gamma_constant must be >= 0");
  if (workers < 0) throw std::runtime_error("workers must be >= 0");
}
