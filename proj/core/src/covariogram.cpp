#include "dualres/covariogram.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <random>
#include <set>

#include "dualres/error.hpp"
#include "dualres/optimize.hpp"
#include "dualres/parallel.hpp"

namespace dualres {

std::vector<Index3> principal_directions() {
  // Azimuth in [0, 180) keeps y > 0, or y == 0 with x > 0; the polar
  // angle in [0, 180) keeps +z but not -z on the z axis.
  std::vector<Index3> u;
  for (std::int64_t z = -1; z <= 1; ++z)
    for (std::int64_t x = -1; x <= 1; ++x) u.push_back({x, 1, z});
  for (std::int64_t z = -1; z <= 1; ++z) u.push_back({1, 0, z});
  u.push_back({0, 0, 1});
  u.push_back({0, 0, 0});
  return u;
}

PerturbationSet scan_perturbations(int n0, int n1) {
  if (n0 < 1 || n1 <= n0) throw UsageError("scan_perturbations needs 1 <= n0 < n1");
  PerturbationSet out;
  out.n0 = n0;
  out.n1 = n1;
  std::set<Index3> seen;
  auto add = [&](const Index3& p) {
    if (seen.insert(p).second) out.offsets.push_back(p);
  };
  // Column-wise Khatri-Rao product of all (a, b, c) in {1..n0}^3 with U.
  const auto dirs = principal_directions();
  for (const auto& d : dirs)
    for (std::int64_t c = 1; c <= n0; ++c)
      for (std::int64_t b = 1; b <= n0; ++b)
        for (std::int64_t a = 1; a <= n0; ++a) add({a * d[0], b * d[1], c * d[2]});
  for (std::int64_t k = n0 + 1; k <= n1; ++k) {
    add({k, 0, 0});
    add({0, k, 0});
    add({0, 0, k});
  }
  return out;
}

PerturbationSet prune_for_grid(const PerturbationSet& p, const Grid3& grid) {
  PerturbationSet out;
  out.n0 = p.n0;
  out.n1 = p.n1;
  for (const auto& o : p.offsets) {
    bool fits = true;
    for (int a = 0; a < 3; ++a) fits = fits && std::abs(o[a]) < grid.dims[a];
    if (fits) out.offsets.push_back(o);
  }
  return out;
}

std::optional<double> CovariogramSummary::sill() const {
  for (std::size_t m = 0; m < size(); ++m)
    if (distances[m] == 0.0 && pairs[m] > 1) return covariances[m];
  return std::nullopt;
}

namespace {

bool same_distance(double a, double b) {
  return std::abs(a - b) <= 1e-12 * std::max({1.0, std::abs(a), std::abs(b)});
}

// Groups entry indices with equal distance; only entries passing `use`.
template <typename Pred>
std::vector<std::vector<std::size_t>> group_by_distance(const std::vector<double>& d, Pred use) {
  std::vector<std::size_t> idx;
  for (std::size_t m = 0; m < d.size(); ++m)
    if (use(m)) idx.push_back(m);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return d[a] < d[b]; });
  std::vector<std::vector<std::size_t>> groups;
  for (auto m : idx) {
    if (groups.empty() || !same_distance(d[groups.back().front()], d[m])) groups.emplace_back();
    groups.back().push_back(m);
  }
  return groups;
}

}  // namespace

void assign_weights(CovariogramSummary& s) {
  s.weights.assign(s.size(), 0.0);
  const auto groups = group_by_distance(s.distances, [&](auto m) { return s.pairs[m] > 1; });
  for (const auto& g : groups)
    for (auto m : g) s.weights[m] = 1.0 / static_cast<double>(g.size());
}

CovariogramSummary extract_covariogram(const MaskedVolume& vol, const PerturbationSet& perts,
                                       int threads) {
  if (vol.count() == 0) throw UsageError("covariogram extraction needs a non-empty mask");
  const auto& g = vol.grid();
  const std::size_t M = perts.size();
  const auto& data = vol.data();
  const auto& mask = vol.mask();
  const auto& vox = vol.masked_indices();

  std::vector<std::int64_t> lin_off(M);
  for (std::size_t m = 0; m < M; ++m) {
    const auto& p = perts.offsets[m];
    lin_off[m] = p[0] + g.dims[0] * (p[1] + g.dims[1] * p[2]);
  }

  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(vox.size())));
  std::vector<std::vector<double>> sab(workers, std::vector<double>(M)),
      sa(workers, std::vector<double>(M)), sb(workers, std::vector<double>(M));
  std::vector<std::vector<std::uint64_t>> cnt(workers, std::vector<std::uint64_t>(M));

  parallel_for(vox.size(), workers, [&](std::size_t b, std::size_t e, int w) {
    auto& ab = sab[w];
    auto& a_ = sa[w];
    auto& b_ = sb[w];
    auto& r = cnt[w];
    for (std::size_t h = b; h < e; ++h) {
      const std::size_t lin = vox[h];
      const auto idx = g.unravel(lin);
      const double ya = data[lin];
      for (std::size_t m = 0; m < M; ++m) {
        const auto& p = perts.offsets[m];
        const std::int64_t i = idx[0] + p[0], j = idx[1] + p[1], k = idx[2] + p[2];
        if (i < 0 || j < 0 || k < 0 || i >= g.dims[0] || j >= g.dims[1] || k >= g.dims[2])
          continue;
        const auto other = static_cast<std::size_t>(static_cast<std::int64_t>(lin) + lin_off[m]);
        if (!mask[other]) continue;
        const double yb = data[other];
        ab[m] += ya * yb;
        a_[m] += ya;
        b_[m] += yb;
        ++r[m];
      }
    }
  });

  CovariogramSummary s;
  s.distances.resize(M);
  s.covariances.assign(M, 0.0);
  s.pairs.assign(M, 0);
  s.s_ab.assign(M, 0.0);
  s.s_a.assign(M, 0.0);
  s.s_b.assign(M, 0.0);
  for (int w = 0; w < workers; ++w)
    for (std::size_t m = 0; m < M; ++m) {
      s.s_ab[m] += sab[w][m];
      s.s_a[m] += sa[w][m];
      s.s_b[m] += sb[w][m];
      s.pairs[m] += cnt[w][m];
    }
  const Vec3 zero{0.0, 0.0, 0.0};
  for (std::size_t m = 0; m < M; ++m) {
    const auto& p = perts.offsets[m];
    const Vec3 off{static_cast<double>(p[0]) * g.voxel_size[0],
                   static_cast<double>(p[1]) * g.voxel_size[1],
                   static_cast<double>(p[2]) * g.voxel_size[2]};
    s.distances[m] = distance(zero, off);
    const double r = static_cast<double>(s.pairs[m]);
    if (s.pairs[m] > 1) s.covariances[m] = (s.s_ab[m] - s.s_a[m] * s.s_b[m] / r) / (r - 1.0);
  }
  assign_weights(s);
  return s;
}

namespace {

// Per-distance aggregates so each objective evaluation costs one kernel
// evaluation per unique distance:  sum_g [W k^2 - 2 S k + Q].
struct Contrast {
  std::vector<double> d, w, s, q;
  bool has_sill = false;
  double sill_w = 0.0, sill_s = 0.0, sill_q = 0.0;

  Contrast(const CovariogramSummary& sum, ContrastMode mode) {
    const auto groups = group_by_distance(sum.distances, [&](auto m) { return sum.weights[m] > 0.0; });
    for (const auto& g : groups) {
      double W = 0, S = 0, Q = 0;
      for (auto m : g) {
        W += sum.weights[m];
        S += sum.weights[m] * sum.covariances[m];
        Q += sum.weights[m] * sum.covariances[m] * sum.covariances[m];
      }
      const double dist = sum.distances[g.front()];
      if (dist == 0.0) {
        if (mode == ContrastMode::KernelPlusNugget) {
          has_sill = true;
          sill_w = W;
          sill_s = S;
          sill_q = Q;
        }
        continue;
      }
      d.push_back(dist);
      w.push_back(W);
      s.push_back(S);
      q.push_back(Q);
    }
  }

  std::size_t entries() const { return d.size() + (has_sill ? 1 : 0); }

  double operator()(const KernelParams& p, double nugget) const {
    double total = 0.0;
    for (std::size_t g = 0; g < d.size(); ++g) {
      const double k = p(d[g]);
      total += w[g] * k * k - 2.0 * s[g] * k + q[g];
    }
    if (has_sill) {
      const double k = p.tau_sq + nugget;
      total += sill_w * k * k - 2.0 * sill_s * k + sill_q;
    }
    return std::max(total, 0.0);
  }
};

}  // namespace

double mce_objective(const CovariogramSummary& s, const KernelParams& p, ContrastMode mode,
                     double nugget) {
  double total = 0.0;
  for (std::size_t m = 0; m < s.size(); ++m) {
    if (s.weights[m] <= 0.0) continue;
    double model;
    if (s.distances[m] == 0.0) {
      if (mode == ContrastMode::Kernel) continue;
      model = p.tau_sq + nugget;
    } else {
      model = p(s.distances[m]);
    }
    const double r = s.covariances[m] - model;
    total += s.weights[m] * r * r;
  }
  return total;
}

MceFit fit_mce(const CovariogramSummary& s, const KernelParams& init, const MceOptions& opts) {
  const auto sill = s.sill();
  if (!sill || !(*sill > 0.0))
    throw NumericalError("covariogram has no positive sill; the tau_sq constraint is empty");
  const Contrast contrast(s, opts.mode);
  if (contrast.entries() < 4) throw NumericalError("fit_mce needs at least 4 weighted entries");
  if (!(opts.nu_lo <= opts.nu_hi) || opts.nu_hi > 2.0 || opts.nu_lo < 0.0 ||
      (opts.nu_lo == opts.nu_hi && opts.nu_lo <= 0.0))
    throw UsageError("invalid nu bounds");

  const bool nugget = opts.mode == ContrastMode::KernelPlusNugget;
  const bool fixed_nu = opts.nu_lo == opts.nu_hi;
  const double c0 = *sill;

  // Coordinates: tau_sq in (0, c0); nu in (nu_lo, nu_hi); psi in (0, inf)
  // or psi = s * nu with s in (0, 1) under the psi <= nu constraint;
  // nugget in (0, inf) in the joint mode.
  std::vector<double> lo{0.0, opts.nu_lo, 0.0};
  std::vector<double> hi{c0, opts.nu_hi, opts.psi_le_nu ? 1.0 : std::numeric_limits<double>::infinity()};
  if (nugget) {
    lo.push_back(0.0);
    hi.push_back(std::numeric_limits<double>::infinity());
  }
  auto to_params = [&](const std::vector<double>& x) {
    KernelParams p;
    p.tau_sq = x[0];
    p.nu = x[1];
    p.psi = opts.psi_le_nu ? x[2] * x[1] : x[2];
    return p;
  };
  auto to_coords = [&](const KernelParams& p, double nug) {
    std::vector<double> x{p.tau_sq, p.nu, opts.psi_le_nu ? p.psi / p.nu : p.psi};
    if (nugget) x.push_back(nug);
    return x;
  };
  auto feasible = [&](const std::vector<double>& x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (lo[i] == hi[i]) {
        if (x[i] != lo[i]) return false;
      } else if (!(x[i] > lo[i] && x[i] < hi[i])) {
        // nu <= 2 and psi <= nu are inclusive upper bounds
        const bool inclusive = (i == 1 && hi[i] == 2.0) || (i == 2 && opts.psi_le_nu);
        if (!(inclusive && x[i] == hi[i])) return false;
      }
    }
    return true;
  };
  auto objective = [&](const std::vector<double>& x) {
    const auto p = to_params(x);
    if (!valid(p)) return std::numeric_limits<double>::infinity();
    return contrast(p, nugget ? x[3] : 0.0);
  };

  const double init_nugget = nugget ? std::max(c0 - init.tau_sq, 1e-6 * c0) : 0.0;
  auto x_init = to_coords(init, init_nugget);
  if (!valid(init) || !feasible(x_init))
    throw UsageError("initial kernel parameters are outside the feasible region");
  // Nudge an inclusive-bound start into the open box the optimizer works in.
  if (!fixed_nu && x_init[1] >= hi[1]) x_init[1] = hi[1] - 1e-6 * (hi[1] - lo[1]);
  if (opts.psi_le_nu && x_init[2] >= hi[2]) x_init[2] = hi[2] * (1.0 - 1e-6);

  MceFit best;
  best.init_objective = contrast(init, init_nugget);
  best.objective = best.init_objective;
  best.params = init;
  best.nugget = init_nugget;

  std::vector<std::vector<double>> starts{x_init};
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int k = 1; k < opts.starts; ++k) {
    std::vector<double> x(x_init.size());
    x[0] = c0 * (0.1 + 0.8 * unif(rng));
    x[1] = fixed_nu ? opts.nu_lo : opts.nu_lo + (opts.nu_hi - opts.nu_lo) * (0.1 + 0.8 * unif(rng));
    const double psi = std::exp(std::log(0.02) + (std::log(2.0) - std::log(0.02)) * unif(rng));
    x[2] = opts.psi_le_nu ? std::min(psi / x[1], 0.95) : psi;
    if (nugget) x[3] = std::max(c0 - x[0], 1e-3 * c0);
    starts.push_back(std::move(x));
  }

  BoxOptions bo;
  bo.max_evals = opts.max_evals;
  bo.ftol = opts.ftol;
  bool any_converged = false;
  for (const auto& x0 : starts) {
    const auto r = minimize_box(objective, x0, lo, hi, bo);
    best.evals += r.evals;
    any_converged = any_converged || r.converged;
    if (r.f < best.objective) {
      best.objective = r.f;
      best.params = to_params(r.x);
      best.nugget = nugget ? r.x[3] : 0.0;
    }
  }
  best.converged = any_converged;
  return best;
}

KernelEstimate estimate_kernel(const MaskedVolume& vol, const EstimateOptions& opts) {
  if (vol.count() < 2) throw NumericalError("kernel estimation needs at least 2 masked voxels");
  const auto perts = prune_for_grid(scan_perturbations(opts.n0, opts.n1), vol.grid());
  KernelEstimate est;
  est.summary = extract_covariogram(vol, perts, opts.threads);
  const auto sill = est.summary.sill();
  if (!sill || !(*sill > 0.0))
    throw NumericalError("image has zero empirical variance; cannot estimate a kernel");

  KernelParams init;
  if (opts.init) {
    init = *opts.init;
  } else {
    const bool fixed_nu = opts.mce.nu_lo == opts.mce.nu_hi;
    init.nu = fixed_nu ? opts.mce.nu_lo : std::min(1.0, opts.mce.nu_hi);
    init.tau_sq = 0.5 * *sill;
    // Half-decay distance of the positive-lag covariogram as a bandwidth guess.
    double c_first = 0.0, d_first = 0.0, d_half = 0.0;
    std::vector<std::size_t> order(est.summary.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](auto a, auto b) { return est.summary.distances[a] < est.summary.distances[b]; });
    for (auto m : order) {
      if (est.summary.weights[m] <= 0.0 || est.summary.distances[m] == 0.0) continue;
      if (d_first == 0.0) {
        d_first = est.summary.distances[m];
        c_first = est.summary.covariances[m];
      } else if (c_first > 0.0 && est.summary.covariances[m] <= 0.5 * c_first) {
        d_half = est.summary.distances[m];
        break;
      }
    }
    const double scale = d_half > 0.0 ? d_half : std::max(d_first, 1.0) * 3.0;
    init.psi = std::log(2.0) / std::pow(scale, init.nu);
    if (opts.mce.psi_le_nu) init.psi = std::min(init.psi, 0.9 * init.nu);
  }
  est.fit = fit_mce(est.summary, init, opts.mce);

  double dmax = 0.0;
  for (std::size_t m = 0; m < est.summary.size(); ++m)
    if (est.summary.weights[m] > 0.0) dmax = std::max(dmax, est.summary.distances[m]);
  const std::size_t n = std::max<std::size_t>(opts.curve_points, 2);
  for (std::size_t i = 0; i < n; ++i) {
    const double d = dmax * static_cast<double>(i) / static_cast<double>(n - 1);
    est.curve.emplace_back(d, est.fit.params(d));
  }
  return est;
}

void write_covariogram_csv(const CovariogramSummary& s, std::ostream& out) {
  out << "distance_mm,cov,weight,pairs\n" << std::setprecision(17);
  for (std::size_t m = 0; m < s.size(); ++m)
    out << s.distances[m] << ',' << s.covariances[m] << ',' << s.weights[m] << ',' << s.pairs[m]
        << '\n';
}

void write_curve_csv(const std::vector<std::pair<double, double>>& curve, std::ostream& out) {
  out << "distance_mm,k_fit\n" << std::setprecision(17);
  for (const auto& [d, k] : curve) out << d << ',' << k << '\n';
}

}  // namespace dualres
