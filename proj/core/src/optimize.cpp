#include "dualres/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dualres/error.hpp"

namespace dualres {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bijection between R and an open interval (lo, hi) of one coordinate.
struct Transform {
  double lo, hi;

  double to_box(double z) const {
    if (lo == hi) return lo;
    double x = z;
    if (std::isfinite(lo) && std::isfinite(hi)) x = lo + (hi - lo) / (1.0 + std::exp(-z));
    else if (std::isfinite(lo)) x = lo + std::exp(z);
    else if (std::isfinite(hi)) x = hi - std::exp(-z);
    // Rounding can land on a face; keep iterates strictly inside.
    if (std::isfinite(lo) && x <= lo) x = std::nextafter(lo, kInf);
    if (std::isfinite(hi) && x >= hi) x = std::nextafter(hi, -kInf);
    return x;
  }
  double from_box(double x) const {
    if (std::isfinite(lo) && std::isfinite(hi)) {
      const double t = (x - lo) / (hi - lo);
      return std::log(t / (1.0 - t));
    }
    if (std::isfinite(lo)) return std::log(x - lo);
    if (std::isfinite(hi)) return -std::log(hi - x);
    return x;
  }
};

}  // namespace

BoxResult minimize_box(const Objective& f, std::vector<double> x0, const std::vector<double>& lo,
                       const std::vector<double>& hi, const BoxOptions& opts) {
  const std::size_t n_all = x0.size();
  if (lo.size() != n_all || hi.size() != n_all) throw UsageError("bounds length mismatch");

  std::vector<std::size_t> free;
  std::vector<Transform> tr;
  for (std::size_t i = 0; i < n_all; ++i) {
    if (lo[i] > hi[i]) throw UsageError("empty feasible box");
    if (lo[i] == hi[i]) {
      x0[i] = lo[i];
      continue;
    }
    if (!(x0[i] > lo[i] && x0[i] < hi[i])) throw UsageError("initial point is not strictly feasible");
    free.push_back(i);
    tr.push_back({lo[i], hi[i]});
  }

  BoxResult res;
  res.x = x0;
  auto eval_full = [&](const std::vector<double>& x) {
    ++res.evals;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
  };
  res.f = eval_full(x0);
  const std::size_t n = free.size();
  if (n == 0) {
    res.converged = true;
    return res;
  }

  auto lift = [&](const std::vector<double>& z) {
    std::vector<double> x = x0;
    for (std::size_t j = 0; j < n; ++j) x[free[j]] = tr[j].to_box(z[j]);
    return x;
  };
  auto eval = [&](const std::vector<double>& z) { return eval_full(lift(z)); };

  std::vector<double> zbest(n);
  for (std::size_t j = 0; j < n; ++j) zbest[j] = tr[j].from_box(x0[free[j]]);
  double fbest = res.f;

  std::vector<std::vector<double>> simplex(n + 1, zbest);
  std::vector<double> fv(n + 1);
  std::vector<std::size_t> order(n + 1);

  for (std::size_t attempt = 0; attempt <= opts.restarts; ++attempt) {
    simplex.assign(n + 1, zbest);
    fv[0] = fbest;
    const double step = opts.initial_step / static_cast<double>(1 + 3 * attempt);
    for (std::size_t j = 0; j < n; ++j) {
      simplex[j + 1][j] += step;
      fv[j + 1] = eval(simplex[j + 1]);
    }

    bool done = false;
    while (!done && res.evals < opts.max_evals) {
      std::iota(order.begin(), order.end(), 0);
      std::sort(order.begin(), order.end(), [&](auto a, auto b) { return fv[a] < fv[b]; });
      const auto best = order.front(), worst = order.back(), second = order[n - 1];

      double diam = 0.0;
      for (std::size_t v = 0; v <= n; ++v)
        for (std::size_t j = 0; j < n; ++j)
          diam = std::max(diam, std::abs(simplex[v][j] - simplex[best][j]));
      const double spread = fv[worst] - fv[best];
      if (spread <= opts.ftol * (std::abs(fv[best]) + opts.ftol) && diam <= opts.xtol) {
        done = true;
        break;
      }
      if (diam <= 1e-14) {
        done = true;
        break;
      }

      std::vector<double> centroid(n, 0.0);
      for (std::size_t v = 0; v <= n; ++v)
        if (v != worst)
          for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[v][j] / static_cast<double>(n);

      auto along = [&](double t) {
        std::vector<double> z(n);
        for (std::size_t j = 0; j < n; ++j) z[j] = centroid[j] + t * (simplex[worst][j] - centroid[j]);
        return z;
      };

      auto zr = along(-1.0);
      const double fr = eval(zr);
      if (fr < fv[best]) {
        auto ze = along(-2.0);
        const double fe = eval(ze);
        if (fe < fr) {
          simplex[worst] = ze;
          fv[worst] = fe;
        } else {
          simplex[worst] = zr;
          fv[worst] = fr;
        }
      } else if (fr < fv[second]) {
        simplex[worst] = zr;
        fv[worst] = fr;
      } else {
        const bool outside = fr < fv[worst];
        auto zc = along(outside ? -0.5 : 0.5);
        const double fc = eval(zc);
        if (fc < (outside ? fr : fv[worst])) {
          simplex[worst] = zc;
          fv[worst] = fc;
        } else {
          for (std::size_t v = 0; v <= n; ++v) {
            if (v == best) continue;
            for (std::size_t j = 0; j < n; ++j)
              simplex[v][j] = simplex[best][j] + 0.5 * (simplex[v][j] - simplex[best][j]);
            fv[v] = eval(simplex[v]);
          }
        }
      }
    }

    const auto it = std::min_element(fv.begin(), fv.end());
    const bool improved = *it < fbest;
    if (*it <= fbest) {
      fbest = *it;
      zbest = simplex[static_cast<std::size_t>(it - fv.begin())];
    }
    res.converged = done;
    if (res.evals >= opts.max_evals) break;
    // A restart that finds nothing better confirms the minimum.
    if (done && !improved && attempt > 0) break;
  }

  res.x = lift(zbest);
  res.f = fbest;
  return res;
}

}  // namespace dualres
