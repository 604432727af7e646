#include "dualres/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dualres/error.hpp"

namespace dualres {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Moments {
  std::size_t m = 0;
  std::size_t n = 0;
  std::vector<double> means;
  double within = 0.0;    // W: mean of within-chain variances
  double var_plus = 0.0;  // (n - 1)/n W + B/n
};

Moments moments(std::span<const std::vector<double>> chains) {
  Moments mo;
  mo.m = chains.size();
  mo.n = std::numeric_limits<std::size_t>::max();
  for (const auto& c : chains) mo.n = std::min(mo.n, c.size());
  if (mo.m == 0 || mo.n < 2) throw UsageError("diagnostics need chains with at least 2 draws");
  const double n = static_cast<double>(mo.n);
  double grand = 0.0;
  for (const auto& c : chains) {
    double s = 0.0;
    for (std::size_t i = 0; i < mo.n; ++i) s += c[i];
    mo.means.push_back(s / n);
    grand += s / n;
  }
  grand /= static_cast<double>(mo.m);
  double b = 0.0;
  for (std::size_t j = 0; j < mo.m; ++j) {
    double ss = 0.0;
    for (std::size_t i = 0; i < mo.n; ++i) {
      const double d = chains[j][i] - mo.means[j];
      ss += d * d;
    }
    mo.within += ss / (n - 1.0);
    b += (mo.means[j] - grand) * (mo.means[j] - grand);
  }
  mo.within /= static_cast<double>(mo.m);
  b = mo.m > 1 ? n * b / static_cast<double>(mo.m - 1) : 0.0;
  mo.var_plus = (n - 1.0) / n * mo.within + b / n;
  return mo;
}

std::vector<std::vector<double>> traces(const std::vector<PosteriorDraws>& chains,
                                        std::size_t voxel) {
  std::vector<std::vector<double>> out;
  for (const auto& c : chains) {
    if (c.failed) continue;
    if (voxel >= c.n_voxels) throw UsageError("voxel index out of range");
    out.push_back(voxel_trace(c, voxel));
  }
  return out;
}

template <typename F>
std::vector<double> per_voxel(const std::vector<PosteriorDraws>& chains, int threads, F f) {
  std::size_t nv = 0;
  for (const auto& c : chains)
    if (!c.failed) nv = c.n_voxels;
  std::vector<double> out(nv, kNaN);
  parallel_for(nv, threads, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t v = b; v < e; ++v) {
      const auto t = traces(chains, v);
      out[v] = f(std::span<const std::vector<double>>(t));
    }
  });
  return out;
}

}  // namespace

std::vector<double> voxel_trace(const PosteriorDraws& chain, std::size_t voxel) {
  const auto n = chain.n_draws();
  std::vector<double> t(n);
  for (std::size_t g = 0; g < n; ++g) t[g] = chain.mu[g * chain.n_voxels + voxel];
  return t;
}

double gelman_rubin(std::span<const std::vector<double>> chains) {
  if (chains.size() < 2) throw UsageError("Gelman-Rubin needs at least two chains");
  const auto mo = moments(chains);
  if (!(mo.within > 0.0)) return kNaN;
  return std::sqrt(mo.var_plus / mo.within);
}

double ess(std::span<const std::vector<double>> chains) {
  const auto mo = moments(chains);
  if (!(mo.var_plus > 0.0)) return kNaN;
  const std::size_t n = mo.n;
  const double nd = static_cast<double>(n);

  // Mean over chains of the lag-t autocovariance (biased, divisor n).
  auto acov = [&](std::size_t t) {
    double total = 0.0;
    for (std::size_t j = 0; j < mo.m; ++j) {
      const auto& c = chains[j];
      double s = 0.0;
      for (std::size_t i = 0; i + t < n; ++i) s += (c[i] - mo.means[j]) * (c[i + t] - mo.means[j]);
      total += s / nd;
    }
    return total / static_cast<double>(mo.m);
  };
  // Within-chain variance with divisor n, so rho_0 = 1 for a single chain.
  const double w_biased = mo.within * (nd - 1.0) / nd;
  auto rho = [&](std::size_t t) { return 1.0 - (w_biased - acov(t)) / mo.var_plus; };

  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t t = 0; t + 1 < n; t += 2) {
    double pair = rho(t) + rho(t + 1);
    if (!(pair > 0.0)) break;
    pair = std::min(pair, prev);
    sum += pair;
    prev = pair;
  }
  const double tau = std::max(-1.0 + 2.0 * sum, 1.0 / std::log10(static_cast<double>(mo.m) * nd));
  return static_cast<double>(mo.m) * nd / tau;
}

double gelman_rubin(const std::vector<PosteriorDraws>& chains, std::size_t voxel) {
  const auto t = traces(chains, voxel);
  return gelman_rubin(std::span<const std::vector<double>>(t));
}

double ess(const std::vector<PosteriorDraws>& chains, std::size_t voxel) {
  const auto t = traces(chains, voxel);
  return ess(std::span<const std::vector<double>>(t));
}

std::vector<double> gelman_rubin_all(const std::vector<PosteriorDraws>& chains, int threads) {
  return per_voxel(chains, threads, [](std::span<const std::vector<double>> t) {
    return gelman_rubin(t);
  });
}

std::vector<double> ess_all(const std::vector<PosteriorDraws>& chains, int threads) {
  return per_voxel(chains, threads,
                   [](std::span<const std::vector<double>> t) { return ess(t); });
}

}  // namespace dualres
