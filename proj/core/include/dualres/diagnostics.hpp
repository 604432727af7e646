#pragma once

#include <span>
#include <vector>

#include "dualres/hmc.hpp"

namespace dualres {

// Potential scale reduction without chain splitting; NaN when the
// within-chain variance is zero. Needs at least two chains.
double gelman_rubin(std::span<const std::vector<double>> chains);
double gelman_rubin(const std::vector<PosteriorDraws>& chains, std::size_t voxel);

// Effective sample size over one or more chains, with autocorrelations
// truncated by Geyer's initial positive (monotone) sequence. NaN when the
// draws have zero variance.
double ess(std::span<const std::vector<double>> chains);
double ess(const std::vector<PosteriorDraws>& chains, std::size_t voxel);

// Per-voxel statistics over all voxels.
std::vector<double> gelman_rubin_all(const std::vector<PosteriorDraws>& chains, int threads = 1);
std::vector<double> ess_all(const std::vector<PosteriorDraws>& chains, int threads = 1);

// Kept draws of one voxel from one chain.
std::vector<double> voxel_trace(const PosteriorDraws& chain, std::size_t voxel);

}  // namespace dualres
