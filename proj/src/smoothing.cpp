#include "ohmm/smoothing.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "ohmm/errors.hpp"

namespace ohmm {

SuffStatSpec gaussian_stats_spec(int m) {
  if (m < 1) throw ConfigError("state count must be >= 1");
  SuffStatSpec spec;
  spec.dim = m * m + 3 * m;
  spec.eval = [m](int x_prev, int x, double y, double* out) {
    std::memset(out, 0, sizeof(double) * (static_cast<size_t>(m) * m + 3 * m));
    out[static_cast<size_t>(x_prev) * m + x] = 1.0;
    const size_t g = static_cast<size_t>(m) * m;
    out[g + x] = 1.0;
    out[g + m + x] = y;
    out[g + 2 * m + x] = y * y;
  };
  spec.eval_t0 = [m](int x, double y, double* out) {
    std::memset(out, 0, sizeof(double) * (static_cast<size_t>(m) * m + 3 * m));
    const size_t g = static_cast<size_t>(m) * m;
    out[g + x] = 1.0;
    out[g + m + x] = y;
    out[g + 2 * m + x] = y * y;
  };
  return spec;
}

namespace {

void check_gamma(double gamma) {
  if (!(gamma > 0.0) || gamma > 1.0)
    throw ConfigError("step size must lie in (0, 1]");
}

void check_spec(const SuffStatSpec& spec) {
  if (spec.dim < 1 || !spec.eval) throw ConfigError("statistic spec is incomplete");
}

}  // namespace

AuxStats aux_init(const SuffStatSpec& spec, int m, double y0, bool include_t0) {
  check_spec(spec);
  if (m < 1) throw ConfigError("state count must be >= 1");
  AuxStats aux;
  aux.m = m;
  aux.dim = spec.dim;
  aux.rho.assign(static_cast<size_t>(m) * spec.dim, 0.0);
  if (include_t0) {
    if (!spec.eval_t0) throw ConfigError("statistic spec has no time-zero term");
    for (int x = 0; x < m; ++x) spec.eval_t0(x, y0, aux.row(x));
  }
  return aux;
}

AuxStats aux_step(const AuxStats& aux, const RetroMatrix& retro, const SuffStatSpec& spec,
                  double y_next, double gamma) {
  check_spec(spec);
  check_gamma(gamma);
  const int m = aux.m;
  const int dim = aux.dim;
  if (retro.m != m || dim != spec.dim)
    throw ConfigError("smoothing statistics and retrospective kernel disagree");

  AuxStats next;
  next.m = m;
  next.dim = dim;
  next.rho.assign(static_cast<size_t>(m) * dim, 0.0);
  std::vector<double> s(dim);
  for (int x = 0; x < m; ++x) {
    double* out = next.row(x);
    for (int xp = 0; xp < m; ++xp) {
      const double w = retro(xp, x);
      if (w == 0.0) continue;
      spec.eval(xp, x, y_next, s.data());
      const double* old = aux.row(xp);
      for (int k = 0; k < dim; ++k)
        out[k] += w * (gamma * s[k] + (1.0 - gamma) * old[k]);
    }
  }
  return next;
}

void gaussian_aux_step_inplace(AuxStats& aux, const RetroMatrix& retro, double y_next,
                               double gamma, std::vector<double>& scratch) {
  check_gamma(gamma);
  const int m = aux.m;
  const int dim = aux.dim;
  if (retro.m != m || dim != m * m + 3 * m)
    throw ConfigError("statistics do not use the gaussian layout");

  scratch.resize(aux.rho.size());
  const double keep = 1.0 - gamma;

  // Mixing term: row(x) <- (1 - gamma) sum_{x'} r(x' | x) old_row(x').
  for (int x = 0; x < m; ++x) {
    double* out = &scratch[static_cast<size_t>(x) * dim];
    std::memset(out, 0, sizeof(double) * dim);
    for (int xp = 0; xp < m; ++xp) {
      const double w = keep * retro(xp, x);
      if (w == 0.0) continue;
      const double* old = aux.row(xp);
      for (int k = 0; k < dim; ++k) out[k] += w * old[k];
    }
  }

  // Gamma term on the sparse support of the statistic: the transition
  // indicator lands in row j at slot (i, j), the moments in row x at state x.
  for (int j = 0; j < m; ++j) {
    double* out = &scratch[static_cast<size_t>(j) * dim];
    for (int i = 0; i < m; ++i) out[static_cast<size_t>(i) * m + j] += gamma * retro(i, j);
  }
  const size_t g = static_cast<size_t>(m) * m;
  const double y2 = y_next * y_next;
  for (int x = 0; x < m; ++x) {
    double* out = &scratch[static_cast<size_t>(x) * dim];
    out[g + x] += gamma;
    out[g + m + x] += gamma * y_next;
    out[g + 2 * m + x] += gamma * y2;
  }

  aux.rho.swap(scratch);
}

TauStats tau_from(const AuxStats& aux, const FilterState& filter) {
  if (filter.phi.size() != static_cast<size_t>(aux.m))
    throw ConfigError("filter state and statistics disagree");
  TauStats tau;
  tau.m = aux.m;
  tau.dim = aux.dim;
  tau.tau.resize(aux.rho.size());
  for (int x = 0; x < aux.m; ++x) {
    const double p = filter.phi[x];
    const double* in = aux.row(x);
    double* out = tau.row(x);
    for (int k = 0; k < aux.dim; ++k) out[k] = p * in[k];
  }
  return tau;
}

TauStats tau_step(const TauStats& tau, const FilterState& phi_before,
                  const HmmParams& params, const SuffStatSpec& spec, double y_next,
                  double gamma) {
  check_spec(spec);
  check_gamma(gamma);
  const int m = params.m;
  const int dim = tau.dim;
  if (tau.m != m || phi_before.phi.size() != static_cast<size_t>(m) || dim != spec.dim)
    throw ConfigError("tau statistics, filter and model disagree");
  if (params.v <= 0.0) throw ConfigError("tau update requires v > 0");

  std::vector<double> e(m);
  emission_exponents(params, y_next, e.data());
  double emax = -std::numeric_limits<double>::infinity();
  for (double x : e) emax = std::max(emax, x);
  std::vector<double> w(m);
  for (int k = 0; k < m; ++k) w[k] = std::exp(e[k] - emax);

  // Joint normalizer shared by both terms; the subtracted emission scale
  // cancels between numerator and denominator.
  double z = 0.0;
  for (int xp = 0; xp < m; ++xp)
    for (int x = 0; x < m; ++x) z += phi_before.phi[xp] * params.trans(xp, x) * w[x];
  if (z <= 0.0) throw NumericalError("zero joint mass in tau update");

  TauStats next;
  next.m = m;
  next.dim = dim;
  next.tau.assign(static_cast<size_t>(m) * dim, 0.0);
  std::vector<double> s(dim);
  for (int x = 0; x < m; ++x) {
    double* out = next.row(x);
    const double gx = w[x] / z;
    for (int xp = 0; xp < m; ++xp) {
      const double move = params.trans(xp, x) * gx;
      if (move == 0.0) continue;
      spec.eval(xp, x, y_next, s.data());
      const double a = gamma * phi_before.phi[xp] * move;
      const double b = (1.0 - gamma) * move;
      const double* old = tau.row(xp);
      for (int k = 0; k < dim; ++k) out[k] += a * s[k] + b * old[k];
    }
  }
  return next;
}

std::vector<double> weighted_stat_sum(const AuxStats& aux, const FilterState& filter) {
  if (filter.phi.size() != static_cast<size_t>(aux.m))
    throw ConfigError("filter state and statistics disagree");
  std::vector<double> flat(aux.dim, 0.0);
  for (int x = 0; x < aux.m; ++x) {
    const double p = filter.phi[x];
    if (p == 0.0) continue;
    const double* in = aux.row(x);
    for (int k = 0; k < aux.dim; ++k) flat[k] += p * in[k];
  }
  return flat;
}

SummedStats unpack_gaussian_stats(const std::vector<double>& flat, int m) {
  if (flat.size() != static_cast<size_t>(m) * m + 3 * static_cast<size_t>(m))
    throw ConfigError("flat statistic does not use the gaussian layout");
  SummedStats out;
  out.m = m;
  out.sq.assign(flat.begin(), flat.begin() + static_cast<size_t>(m) * m);
  const size_t g = static_cast<size_t>(m) * m;
  out.sg0.assign(flat.begin() + g, flat.begin() + g + m);
  out.sg1.assign(flat.begin() + g + m, flat.begin() + g + 2 * m);
  out.sg2.assign(flat.begin() + g + 2 * m, flat.begin() + g + 3 * m);
  return out;
}

SummedStats summed_stats(const AuxStats& aux, const FilterState& filter) {
  return unpack_gaussian_stats(weighted_stat_sum(aux, filter), aux.m);
}

}  // namespace ohmm
