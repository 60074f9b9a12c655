#include "ohmm/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "ohmm/errors.hpp"

namespace ohmm {

HmmParams::HmmParams(int m_, std::vector<double> q_, std::vector<double> mu_, double v_)
    : m(m_), q(std::move(q_)), mu(std::move(mu_)), v(v_) {
  validate();
}

void HmmParams::validate() const {
  if (m < 1) throw ConfigError("state count must be >= 1");
  if (q.size() != static_cast<size_t>(m) * m)
    throw ConfigError("transition matrix must have m*m entries");
  if (mu.size() != static_cast<size_t>(m))
    throw ConfigError("mean vector must have m entries");
  if (!std::isfinite(v) || v < 0.0)
    throw ConfigError("noise variance must be finite and >= 0");
  for (double x : mu)
    if (!std::isfinite(x)) throw ConfigError("state means must be finite");
  for (int i = 0; i < m; ++i) {
    double row = 0.0;
    for (int j = 0; j < m; ++j) {
      const double p = q[static_cast<size_t>(i) * m + j];
      if (!std::isfinite(p) || p < 0.0)
        throw ConfigError("transition probabilities must be finite and >= 0");
      row += p;
    }
    if (std::abs(row - 1.0) > 1e-12)
      throw ConfigError("transition matrix rows must sum to 1 within 1e-12");
  }
}

void validate_probability_vector(const std::vector<double>& p, int m, const char* what) {
  if (p.size() != static_cast<size_t>(m))
    throw ConfigError(std::string(what) + ": wrong length");
  double sum = 0.0;
  for (double x : p) {
    if (!std::isfinite(x) || x < 0.0)
      throw ConfigError(std::string(what) + ": entries must be finite and >= 0");
    sum += x;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw ConfigError(std::string(what) + ": entries must sum to 1 within 1e-9");
}

void emission_exponents(const HmmParams& params, double y, double* out) {
  const double inv2v = 1.0 / (2.0 * params.v);
  for (int k = 0; k < params.m; ++k) {
    const double d = y - params.mu[k];
    out[k] = -d * d * inv2v;
  }
}

std::vector<double> emission_weights(const HmmParams& params, double y, double* log_scale) {
  if (!std::isfinite(y)) throw ConfigError("observation must be finite");
  if (params.v <= 0.0) throw ConfigError("emission weights require v > 0");
  std::vector<double> w(params.m);
  emission_exponents(params, y, w.data());
  double emax = -std::numeric_limits<double>::infinity();
  for (double e : w) emax = std::max(emax, e);
  for (double& e : w) e = std::exp(e - emax);
  if (log_scale) *log_scale = emax;
  return w;
}

namespace {

// Inverse-CDF draw from a probability vector; the final index absorbs any
// rounding deficit.
int sample_index(const double* p, int m, double u) {
  double acc = 0.0;
  for (int k = 0; k < m - 1; ++k) {
    acc += p[k];
    if (u < acc) return k;
  }
  return m - 1;
}

}  // namespace

Trajectory simulate(const HmmParams& params, long n, const std::vector<double>& nu,
                    std::uint64_t seed) {
  params.validate();
  if (n < 0) throw ConfigError("simulation horizon must be >= 0");
  validate_probability_vector(nu, params.m, "initial distribution");

  std::mt19937_64 eng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double sd = std::sqrt(params.v);

  Trajectory traj;
  traj.states.resize(n + 1);
  traj.observations.resize(n + 1);
  int state = sample_index(nu.data(), params.m, unif(eng));
  for (long t = 0; t <= n; ++t) {
    if (t > 0)
      state = sample_index(&params.q[static_cast<size_t>(state) * params.m], params.m,
                           unif(eng));
    traj.states[t] = state;
    traj.observations[t] = params.mu[state] + sd * gauss(eng);
  }
  return traj;
}

namespace {

// Strong connectivity of the directed graph on positive transition entries.
bool strongly_connected(const HmmParams& params) {
  const int m = params.m;
  auto reach = [&](bool transpose) {
    std::vector<char> seen(m, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
      const int i = stack.back();
      stack.pop_back();
      for (int j = 0; j < m; ++j) {
        const double p = transpose ? params.trans(j, i) : params.trans(i, j);
        if (p > 0.0 && !seen[j]) {
          seen[j] = 1;
          ++count;
          stack.push_back(j);
        }
      }
    }
    return count == m;
  };
  return reach(false) && reach(true);
}

}  // namespace

std::vector<double> stationary_distribution(const HmmParams& params) {
  params.validate();
  const int m = params.m;
  if (!strongly_connected(params))
    throw NumericalError("chain is reducible: no unique stationary distribution");
  if (m == 1) return {1.0};

  // Solve (q^T - I) pi = 0 with the last equation replaced by sum(pi) = 1,
  // using Gaussian elimination with partial pivoting.
  std::vector<double> a(static_cast<size_t>(m) * (m + 1), 0.0);
  auto at = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * (m + 1) + j]; };
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) at(i, j) = params.trans(j, i) - (i == j ? 1.0 : 0.0);
  for (int j = 0; j < m; ++j) at(m - 1, j) = 1.0;
  at(m - 1, m) = 1.0;

  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int i = col + 1; i < m; ++i)
      if (std::abs(at(i, col)) > std::abs(at(piv, col))) piv = i;
    if (at(piv, col) == 0.0)
      throw NumericalError("stationary distribution solve is singular");
    if (piv != col)
      for (int j = col; j <= m; ++j) std::swap(at(piv, j), at(col, j));
    for (int i = col + 1; i < m; ++i) {
      const double f = at(i, col) / at(col, col);
      for (int j = col; j <= m; ++j) at(i, j) -= f * at(col, j);
    }
  }
  std::vector<double> pi(m);
  for (int i = m - 1; i >= 0; --i) {
    double s = at(i, m);
    for (int j = i + 1; j < m; ++j) s -= at(i, j) * pi[j];
    pi[i] = s / at(i, i);
  }

  double sum = 0.0;
  for (double& x : pi) {
    if (x < 0.0) x = 0.0;  // clip solver noise
    sum += x;
  }
  for (double& x : pi) x /= sum;

  for (int j = 0; j < m; ++j) {
    double pij = 0.0;
    for (int i = 0; i < m; ++i) pij += pi[i] * params.trans(i, j);
    if (std::abs(pij - pi[j]) > 1e-10)
      throw NumericalError("stationary distribution residual exceeds 1e-10");
  }
  return pi;
}

std::vector<double> uniform_distribution(int m) {
  if (m < 1) throw ConfigError("state count must be >= 1");
  return std::vector<double>(m, 1.0 / m);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + (index + 1) * 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace ohmm
