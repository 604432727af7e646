#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dualres/grid.hpp"
#include "dualres/kernel.hpp"

namespace dualres {

// Sparse local-kriging weights W (rows: target voxels, columns: knot
// voxels), compressed row storage. Row i holds K_N^{-1} k_N for the
// knots N within radius r of target i; rows with no knots are empty.
struct KrigingWeights {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double radius = 0.0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col_idx;
  std::vector<double> values;

  std::size_t nnz() const noexcept { return values.size(); }
  std::size_t row_size(std::size_t i) const noexcept { return row_ptr[i + 1] - row_ptr[i]; }
  std::vector<std::size_t> neighborhood_sizes() const;

  static KrigingWeights identity(std::size_t n);
};

// Masked-voxel ordinals of `knots` within Euclidean distance r of v,
// in increasing order.
std::vector<std::size_t> neighborhood(const MaskedVolume& knots, const Vec3& v, double r);

// Solves K_N w = k_N for one target location. Throws NumericalError when
// the system stays singular after one jittered retry.
std::vector<double> local_weights(const KernelParams& params, std::span<const Vec3> coords,
                                  const Vec3& v);

struct KrigingOptions {
  int threads = 1;
};

// One row per masked voxel of `targets`, columns indexed by masked
// voxels of `knots`.
KrigingWeights build_W(const MaskedVolume& knots, const MaskedVolume& targets,
                       const KernelParams& params, double r, KrigingOptions opts = {});

std::vector<double> apply_W(const KrigingWeights& w, std::span<const double> x);
std::vector<double> apply_Wt(const KrigingWeights& w, std::span<const double> y);

// Triplet text dump: "# rows cols nnz" header then "row col value" lines.
void write_triplets(const KrigingWeights& w, std::ostream& out);
void write_triplets(const KrigingWeights& w, const std::string& path);

}  // namespace dualres
