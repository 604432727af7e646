#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dualres/hmc.hpp"

namespace dualres {

struct DecisionParams {
  double k1 = 12.0;  // false-negative penalty
  double k2 = 1.0;   // false-positive penalty
  double t = 1.0;    // per-discovery penalty

  // (1 + k2 + t) / (2 + k1 + k2)
  double threshold() const;
  // Empty when the threshold lies in [0, 1]; a warning otherwise.
  std::string check() const;
};

enum class MStatistic {
  MonteCarlo,  // average of m_i / max_j m_j over draws
  PlugIn,      // ratio evaluated once at the posterior-mean m
};

struct ActivationSummary {
  std::vector<double> m;      // |posterior mean| / posterior sd
  std::vector<double> f_bar;  // expected relative signal strength, in [0, 1]
  std::vector<std::uint8_t> delta;
  double threshold = 0.0;
  std::size_t zero_sd = 0;  // voxels whose sd vanished (f_bar forced to 0)

  std::size_t discoveries() const noexcept;
};

// Per-voxel m and f_bar from pooled kept draws (at least two).
ActivationSummary posterior_m(const PosteriorDraws& draws, MStatistic kind = MStatistic::MonteCarlo);

// Applies delta_i = f_bar_i >= threshold.
ActivationSummary decide(ActivationSummary summary, const DecisionParams& params);
ActivationSummary decide_at(ActivationSummary summary, double threshold);

struct CountThreshold {
  double threshold = 0.0;
  std::size_t achieved = 0;
};

// Largest threshold yielding at least n discoveries (all ties at the
// boundary included). n = 0 gives a threshold just above max f_bar.
CountThreshold threshold_for_count(std::span<const double> f_bar, std::size_t n);

// Posterior expected loss
//   sum_i -f d - (1-f)(1-d) + k1 f (1-d) + k2 (1-f) d + t d
double risk(std::span<const double> f, std::span<const std::uint8_t> delta,
            const DecisionParams& params);

}  // namespace dualres
