#include "ohmm/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <mutex>
#include <thread>

#include "ohmm/errors.hpp"

namespace ohmm {

std::vector<double> ScoreVector::flat() const {
  std::vector<double> out;
  out.reserve(d_q.size() + d_mu.size() + 1);
  out.insert(out.end(), d_q.begin(), d_q.end());
  out.insert(out.end(), d_mu.begin(), d_mu.end());
  out.push_back(d_v);
  return out;
}

ScoreVector score(const HmmParams& params, const std::vector<double>& nu,
                  const std::vector<double>& ys, bool omit_variance_normalizer_term) {
  params.validate();
  if (params.v <= 0.0) throw ConfigError("score requires v > 0");
  for (double p : params.q)
    if (!(p > 0.0)) throw ConfigError("score requires interior transition probabilities");

  const SummedStats stats = e_step_fb(params, nu, ys);
  const int m = params.m;
  ScoreVector sc;
  sc.m = m;
  sc.d_q.assign(static_cast<size_t>(m) * (m - 1), 0.0);
  sc.d_mu.assign(m, 0.0);
  for (int i = 0; i < m; ++i) {
    const double last = stats.sq_at(i, m - 1) / params.trans(i, m - 1);
    for (int j = 0; j + 1 < m; ++j)
      sc.d_q[static_cast<size_t>(i) * (m - 1) + j] =
          stats.sq_at(i, j) / params.trans(i, j) - last;
    sc.d_mu[i] = (stats.sg1[i] - params.mu[i] * stats.sg0[i]) / params.v;
  }
  double quad = 0.0, mass = 0.0;
  for (int i = 0; i < m; ++i) {
    quad += stats.sg2[i] - 2.0 * params.mu[i] * stats.sg1[i] +
            params.mu[i] * params.mu[i] * stats.sg0[i];
    mass += stats.sg0[i];
  }
  sc.d_v = quad / (2.0 * params.v * params.v);
  if (!omit_variance_normalizer_term) sc.d_v -= mass / (2.0 * params.v);
  return sc;
}

void parallel_for(long count, int workers, const std::function<void(long)>& fn) {
  if (count <= 0) return;
  int n_threads = workers > 0 ? workers
                              : static_cast<int>(std::thread::hardware_concurrency());
  if (n_threads < 1) n_threads = 1;
  if (n_threads > count) n_threads = static_cast<int>(count);
  if (n_threads == 1) {
    for (long i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<long> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&]() {
      for (;;) {
        const long i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

FisherEstimate fisher_information(const HmmParams& params, int n_sequences,
                                  long sequence_length, std::uint64_t seed, int workers) {
  params.validate();
  if (params.v <= 0.0) throw ConfigError("Fisher estimation requires v > 0");
  if (n_sequences < 1) throw ConfigError("need at least one sequence");
  if (sequence_length < 2) throw ConfigError("sequence length must be >= 2");

  const int m = params.m;
  const int dim = m * (m - 1) + m + 1;
  const std::vector<double> start = stationary_distribution(params);
  const std::vector<double> prior = uniform_distribution(m);

  // Per-sequence scores are filled independently and reduced in a fixed
  // order, so the result does not depend on thread scheduling.
  std::vector<std::vector<double>> scores(n_sequences);
  parallel_for(n_sequences, workers, [&](long i) {
    const Trajectory traj =
        simulate(params, sequence_length - 1, start, derive_seed(seed, i));
    scores[i] = score(params, prior, traj.observations).flat();
  });

  FisherEstimate est;
  est.m = m;
  est.dim = dim;
  est.n_sequences = n_sequences;
  est.sequence_length = sequence_length;
  est.information.assign(static_cast<size_t>(dim) * dim, 0.0);
  const double w = static_cast<double>(sequence_length) / n_sequences;
  for (int i = 0; i < n_sequences; ++i) {
    const std::vector<double>& s = scores[i];
    for (int a = 0; a < dim; ++a)
      for (int b = a; b < dim; ++b)
        est.information[static_cast<size_t>(a) * dim + b] += w * s[a] * s[b];
  }
  for (int a = 0; a < dim; ++a)
    for (int b = 0; b < a; ++b)
      est.information[static_cast<size_t>(a) * dim + b] =
          est.information[static_cast<size_t>(b) * dim + a];

  est.inverse = invert_matrix(est.information, dim);
  if (!est.inverse.empty()) {
    est.asymptotic_sd.resize(dim);
    for (int a = 0; a < dim; ++a) {
      const double d = est.inverse[static_cast<size_t>(a) * dim + a];
      if (!(d > 0.0)) {
        est.inverse.clear();
        est.asymptotic_sd.clear();
        break;
      }
      est.asymptotic_sd[a] = std::sqrt(d);
    }
  }
  return est;
}

std::vector<double> trace_column_sds(const FisherEstimate& fisher) {
  if (fisher.inverse.empty())
    throw ConfigError("Fisher estimate carries no invertible information matrix");
  const int m = fisher.m;
  const int dim = fisher.dim;
  const int nfree = m - 1;
  auto inv = [&](int a, int b) { return fisher.inverse[static_cast<size_t>(a) * dim + b]; };

  std::vector<double> sds(2 * m + 1, 0.0);
  for (int i = 0; i < m; ++i) {
    if (i < nfree) {
      const int idx = i * nfree + i;
      sds[i] = std::sqrt(std::max(inv(idx, idx), 0.0));
    } else {
      // Dependent entry q(m-1, m-1) = 1 - sum of the last row's free
      // entries: its variance is the summed covariance of that block.
      double var = 0.0;
      for (int a = 0; a < nfree; ++a)
        for (int b = 0; b < nfree; ++b) var += inv(i * nfree + a, i * nfree + b);
      sds[i] = std::sqrt(std::max(var, 0.0));
    }
  }
  for (int i = 0; i < m; ++i) {
    const int idx = m * nfree + i;
    sds[m + i] = std::sqrt(std::max(inv(idx, idx), 0.0));
  }
  sds[2 * m] = std::sqrt(std::max(inv(dim - 1, dim - 1), 0.0));
  return sds;
}

BoundCheck check_lemma_bound(const std::vector<double>& alpha1,
                             const std::vector<double>& alpha2,
                             const std::vector<double>& beta1,
                             const std::vector<double>& beta2,
                             const std::vector<double>& q, int m, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  validate_probability_vector(alpha1, m, "alpha1");
  validate_probability_vector(alpha2, m, "alpha2");
  validate_probability_vector(beta1, m, "beta1");
  validate_probability_vector(beta2, m, "beta2");
  if (q.size() != static_cast<size_t>(m) * m)
    throw ConfigError("kernel must have m*m entries");
  for (double p : q)
    if (!(p >= epsilon - 1e-15))
      throw ConfigError("kernel entries must be >= epsilon");

  auto ratio_kernel = [&](const std::vector<double>& a, const std::vector<double>& b,
                          std::vector<double>& out) {
    double z = 0.0;
    for (int x = 0; x < m; ++x)
      for (int xp = 0; xp < m; ++xp) {
        out[static_cast<size_t>(x) * m + xp] = a[x] * q[static_cast<size_t>(x) * m + xp] * b[xp];
        z += out[static_cast<size_t>(x) * m + xp];
      }
    for (double& e : out) e /= z;
  };
  std::vector<double> j1(static_cast<size_t>(m) * m), j2(static_cast<size_t>(m) * m);
  ratio_kernel(alpha1, beta1, j1);
  ratio_kernel(alpha2, beta2, j2);

  BoundCheck out;
  for (size_t k = 0; k < j1.size(); ++k) out.lhs += std::abs(j1[k] - j2[k]);
  double da = 0.0, db = 0.0;
  for (int x = 0; x < m; ++x) {
    da += std::abs(alpha1[x] - alpha2[x]);
    db += std::abs(beta1[x] - beta2[x]);
  }
  out.rhs = (da + db) / epsilon;
  out.pass = out.lhs <= out.rhs + 1e-12;
  return out;
}

namespace {

std::vector<double> scale_row(const HmmParams& theta, const HmmParams& truth,
                              const std::vector<double>& sds, long n) {
  const int m = truth.m;
  const double root = std::sqrt(static_cast<double>(n));
  std::vector<double> out(2 * m + 1);
  for (int i = 0; i < m; ++i) {
    if (!(sds[i] > 0.0)) throw ConfigError("nonpositive asymptotic standard deviation");
    out[i] = root * (theta.trans(i, i) - truth.trans(i, i)) / sds[i];
  }
  for (int i = 0; i < m; ++i) {
    if (!(sds[m + i] > 0.0)) throw ConfigError("nonpositive asymptotic standard deviation");
    out[m + i] = root * (theta.mu[i] - truth.mu[i]) / sds[m + i];
  }
  if (!(sds[2 * m] > 0.0)) throw ConfigError("nonpositive asymptotic standard deviation");
  out[2 * m] = root * (theta.v - truth.v) / sds[2 * m];
  return out;
}

}  // namespace

ScaledTrace center_and_scale(const EstimateTrace& trace, const HmmParams& truth,
                             const FisherEstimate& fisher) {
  truth.validate();
  if (fisher.asymptotic_sd.empty())
    throw ConfigError("Fisher estimate carries no asymptotic standard deviations");
  if (fisher.m != truth.m) throw ConfigError("Fisher estimate and truth disagree on m");
  const std::vector<double> sds = trace_column_sds(fisher);

  ScaledTrace out;
  for (const EstimateRow& row : trace.rows) {
    if (row.theta.m != truth.m) throw ConfigError("trace and truth disagree on m");
    out.n.push_back(row.n);
    out.values.push_back(scale_row(row.theta, truth, sds, row.n));
    out.avg_values.push_back(row.has_avg ? scale_row(row.theta_avg, truth, sds, row.n)
                                         : std::vector<double>());
  }
  return out;
}

std::vector<double> invert_matrix(const std::vector<double>& a, int n) {
  std::vector<double> work(a);
  std::vector<double> inv(static_cast<size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) inv[static_cast<size_t>(i) * n + i] = 1.0;
  double scale = 0.0;
  for (double x : a) scale = std::max(scale, std::abs(x));
  const double tol = scale > 0.0 ? 1e-12 * scale : 0.0;

  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int i = col + 1; i < n; ++i)
      if (std::abs(work[static_cast<size_t>(i) * n + col]) >
          std::abs(work[static_cast<size_t>(piv) * n + col]))
        piv = i;
    const double p = work[static_cast<size_t>(piv) * n + col];
    if (!(std::abs(p) > tol)) return {};
    if (piv != col)
      for (int j = 0; j < n; ++j) {
        std::swap(work[static_cast<size_t>(piv) * n + j], work[static_cast<size_t>(col) * n + j]);
        std::swap(inv[static_cast<size_t>(piv) * n + j], inv[static_cast<size_t>(col) * n + j]);
      }
    const double inv_p = 1.0 / work[static_cast<size_t>(col) * n + col];
    for (int j = 0; j < n; ++j) {
      work[static_cast<size_t>(col) * n + j] *= inv_p;
      inv[static_cast<size_t>(col) * n + j] *= inv_p;
    }
    for (int i = 0; i < n; ++i) {
      if (i == col) continue;
      const double f = work[static_cast<size_t>(i) * n + col];
      if (f == 0.0) continue;
      for (int j = 0; j < n; ++j) {
        work[static_cast<size_t>(i) * n + j] -= f * work[static_cast<size_t>(col) * n + j];
        inv[static_cast<size_t>(i) * n + j] -= f * inv[static_cast<size_t>(col) * n + j];
      }
    }
  }
  return inv;
}

std::vector<double> symmetric_eigenvalues(std::vector<double> a, int n) {
  auto at = [&](int i, int j) -> double& { return a[static_cast<size_t>(i) * n + j]; };
  double frob = 0.0;
  for (double x : a) frob += x * x;
  frob = std::sqrt(frob);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += 2.0 * at(i, j) * at(i, j);
    if (std::sqrt(off) <= 1e-14 * std::max(frob, 1e-300)) break;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) {
        if (at(p, q) == 0.0) continue;
        const double theta_ = (at(q, q) - at(p, p)) / (2.0 * at(p, q));
        const double t = (theta_ >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta_) + std::sqrt(theta_ * theta_ + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = at(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

}  // namespace ohmm
