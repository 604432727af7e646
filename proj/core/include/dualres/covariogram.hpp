#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dualres/grid.hpp"
#include "dualres/kernel.hpp"

namespace dualres {

// Grid index offsets visited by the covariogram raster scan. Every
// offset lies in the half-space {y > 0} u {y = 0, x > 0} u {x = y = 0,
// z >= 0}, so each unordered voxel pair is visited at most once.
struct PerturbationSet {
  std::vector<Index3> offsets;
  int n0 = 18;
  int n1 = 25;
  std::size_t size() const noexcept { return offsets.size(); }
};

// The 14 principal directions (13 half-space representatives of
// {-1,0,1}^3 \ {0} plus the zero row).
std::vector<Index3> principal_directions();

PerturbationSet scan_perturbations(int n0 = 18, int n1 = 25);

// Drops offsets that cannot connect two voxels of `grid` (e.g. any
// z offset on a single-slice image).
PerturbationSet prune_for_grid(const PerturbationSet& p, const Grid3& grid);

struct CovariogramSummary {
  std::vector<double> distances;
  std::vector<double> covariances;  // 0 where pairs <= 1
  std::vector<double> weights;
  std::vector<std::uint64_t> pairs;

  // Sufficient statistics behind the covariances.
  std::vector<double> s_ab, s_a, s_b;

  std::size_t size() const noexcept { return distances.size(); }
  // Covariance at distance 0 (empirical variance); nullopt if absent.
  std::optional<double> sill() const;
};

// Weights: 1 / #(entries sharing this distance) over entries with more
// than one pair; 0 otherwise. Distances are grouped with a 1e-12
// relative tolerance.
void assign_weights(CovariogramSummary& s);

CovariogramSummary extract_covariogram(const MaskedVolume& vol, const PerturbationSet& perts,
                                       int threads = 1);

enum class ContrastMode {
  Kernel,           // fit k(d) to d > 0 entries; the sill is used only as a bound
  KernelPlusNugget  // also fit the sill entry as tau_sq + nugget
};

struct MceOptions {
  double nu_lo = 0.0;  // exclusive unless nu_lo == nu_hi
  double nu_hi = 2.0;
  bool psi_le_nu = true;
  ContrastMode mode = ContrastMode::Kernel;
  std::size_t max_evals = 500;
  double ftol = 1e-10;
  int starts = 5;
  std::uint64_t seed = 20210101;
};

struct MceFit {
  KernelParams params;
  double nugget = 0.0;
  double objective = 0.0;
  double init_objective = 0.0;
  std::size_t evals = 0;
  bool converged = false;  // false: evaluation budget exhausted, best-so-far returned
};

// Weighted least-squares contrast sum_m w_m (c_m - k(d_m))^2 over the
// entries selected by `mode`.
double mce_objective(const CovariogramSummary& s, const KernelParams& p,
                     ContrastMode mode = ContrastMode::Kernel, double nugget = 0.0);

MceFit fit_mce(const CovariogramSummary& s, const KernelParams& init, const MceOptions& opts = {});

struct EstimateOptions {
  int n0 = 18;
  int n1 = 25;
  MceOptions mce;
  std::optional<KernelParams> init;
  int threads = 1;
  std::size_t curve_points = 200;
};

struct KernelEstimate {
  MceFit fit;
  CovariogramSummary summary;
  std::vector<std::pair<double, double>> curve;  // (distance, fitted covariance)
};

KernelEstimate estimate_kernel(const MaskedVolume& vol, const EstimateOptions& opts = {});

// CSV: distance_mm,cov,weight,pairs
void write_covariogram_csv(const CovariogramSummary& s, std::ostream& out);
// CSV: distance_mm,k_fit
void write_curve_csv(const std::vector<std::pair<double, double>>& curve, std::ostream& out);

}  // namespace dualres
