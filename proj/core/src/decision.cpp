#include "dualres/decision.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "dualres/error.hpp"

namespace dualres {

double DecisionParams::threshold() const {
  if (k1 < 0.0 || k2 < 0.0 || t < 0.0) throw UsageError("k1, k2 and t must be non-negative");
  return (1.0 + k2 + t) / (2.0 + k1 + k2);
}

std::string DecisionParams::check() const {
  const double th = threshold();
  if (th >= 0.0 && th <= 1.0) return {};
  std::ostringstream os;
  os << "threshold " << th << " lies outside [0, 1]; "
     << (th > 1.0 ? "no voxel can be declared active" : "every voxel is declared active");
  return os.str();
}

std::size_t ActivationSummary::discoveries() const noexcept {
  std::size_t n = 0;
  for (auto d : delta) n += d != 0;
  return n;
}

ActivationSummary posterior_m(const PosteriorDraws& draws, MStatistic kind) {
  const std::size_t G = draws.n_draws();
  const std::size_t V = draws.n_voxels;
  if (G < 2) throw UsageError("posterior_m needs at least two kept draws");

  std::vector<double> mean(V, 0.0), sd(V, 0.0);
  for (std::size_t g = 0; g < G; ++g) {
    const auto row = draws.draw(g);
    for (std::size_t v = 0; v < V; ++v) mean[v] += row[v];
  }
  for (auto& x : mean) x /= static_cast<double>(G);
  for (std::size_t g = 0; g < G; ++g) {
    const auto row = draws.draw(g);
    for (std::size_t v = 0; v < V; ++v) sd[v] += (row[v] - mean[v]) * (row[v] - mean[v]);
  }
  ActivationSummary out;
  out.m.assign(V, 0.0);
  out.f_bar.assign(V, 0.0);
  std::vector<double> inv_sd(V, 0.0);
  for (std::size_t v = 0; v < V; ++v) {
    sd[v] = std::sqrt(sd[v] / static_cast<double>(G - 1));
    if (sd[v] > 0.0) {
      inv_sd[v] = 1.0 / sd[v];
      out.m[v] = std::abs(mean[v]) * inv_sd[v];
    } else {
      ++out.zero_sd;
    }
  }

  if (kind == MStatistic::PlugIn) {
    const double mx = *std::max_element(out.m.begin(), out.m.end());
    if (mx > 0.0)
      for (std::size_t v = 0; v < V; ++v) out.f_bar[v] = out.m[v] / mx;
    return out;
  }

  std::vector<double> mg(V);
  std::size_t used = 0;
  for (std::size_t g = 0; g < G; ++g) {
    const auto row = draws.draw(g);
    double mx = 0.0;
    for (std::size_t v = 0; v < V; ++v) {
      mg[v] = std::abs(row[v]) * inv_sd[v];
      mx = std::max(mx, mg[v]);
    }
    ++used;
    if (!(mx > 0.0)) continue;
    for (std::size_t v = 0; v < V; ++v) out.f_bar[v] += mg[v] / mx;
  }
  for (auto& f : out.f_bar) f = std::clamp(f / static_cast<double>(used), 0.0, 1.0);
  return out;
}

ActivationSummary decide_at(ActivationSummary summary, double threshold) {
  summary.threshold = threshold;
  summary.delta.assign(summary.f_bar.size(), 0);
  for (std::size_t i = 0; i < summary.f_bar.size(); ++i)
    summary.delta[i] = summary.f_bar[i] >= threshold ? 1 : 0;
  return summary;
}

ActivationSummary decide(ActivationSummary summary, const DecisionParams& params) {
  return decide_at(std::move(summary), params.threshold());
}

CountThreshold threshold_for_count(std::span<const double> f_bar, std::size_t n) {
  if (n > f_bar.size()) throw UsageError("requested more discoveries than voxels");
  CountThreshold out;
  if (f_bar.empty()) return out;
  if (n == 0) {
    const double mx = *std::max_element(f_bar.begin(), f_bar.end());
    out.threshold = std::nextafter(mx, std::numeric_limits<double>::infinity());
    return out;
  }
  if (n == f_bar.size()) {
    out.threshold = 0.0;
    out.achieved = n;
    return out;
  }
  std::vector<double> sorted(f_bar.begin(), f_bar.end());
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(n - 1), sorted.end(),
                   std::greater<>());
  out.threshold = sorted[n - 1];
  for (double f : f_bar) out.achieved += f >= out.threshold;
  return out;
}

double risk(std::span<const double> f, std::span<const std::uint8_t> delta,
            const DecisionParams& p) {
  if (f.size() != delta.size()) throw UsageError("f and delta lengths differ");
  double r = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double d = delta[i] ? 1.0 : 0.0;
    r += -f[i] * d - (1.0 - f[i]) * (1.0 - d) + p.k1 * f[i] * (1.0 - d) +
         p.k2 * (1.0 - f[i]) * d + p.t * d;
  }
  return r;
}

}  // namespace dualres
