#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dualres {

using Index3 = std::array<std::int64_t, 3>;
using Vec3 = std::array<double, 3>;

// Regular lattice with axis-aligned voxels. Voxel (i,j,k) sits at
// origin + (i,j,k) * voxel_size in world (mm) coordinates.
struct Grid3 {
  std::array<std::int64_t, 3> dims{1, 1, 1};
  Vec3 voxel_size{1.0, 1.0, 1.0};
  Vec3 origin{0.0, 0.0, 0.0};

  Grid3() = default;
  Grid3(std::array<std::int64_t, 3> d, Vec3 vs, Vec3 o = {0.0, 0.0, 0.0});

  std::size_t size() const noexcept {
    return static_cast<std::size_t>(dims[0] * dims[1] * dims[2]);
  }
  bool contains(const Index3& idx) const noexcept;
  // Column-major (x fastest) linear index.
  std::size_t linear(const Index3& idx) const noexcept {
    return static_cast<std::size_t>(idx[0] + dims[0] * (idx[1] + dims[1] * idx[2]));
  }
  Index3 unravel(std::size_t lin) const noexcept;
  bool operator==(const Grid3&) const = default;
};

// Throws std::out_of_range for indices outside the grid.
Vec3 world_coords(const Grid3& grid, const Index3& index);
double distance(const Vec3& a, const Vec3& b) noexcept;

// A scalar image with a boolean analysis mask. Values at unmasked voxels
// are carried along but never read by the model.
class MaskedVolume {
 public:
  MaskedVolume() = default;
  MaskedVolume(Grid3 grid, std::vector<std::uint8_t> mask, std::vector<double> data);
  // Mask derived from the data: finite and nonzero.
  static MaskedVolume from_data(Grid3 grid, std::vector<double> data);

  const Grid3& grid() const noexcept { return grid_; }
  const std::vector<std::uint8_t>& mask() const noexcept { return mask_; }
  const std::vector<double>& data() const noexcept { return data_; }
  std::vector<double>& data() noexcept { return data_; }

  bool in_mask(std::size_t lin) const noexcept { return mask_[lin] != 0; }
  std::size_t count() const noexcept { return masked_.size(); }

  // Linear grid indices of masked voxels, strictly increasing.
  const std::vector<std::size_t>& masked_indices() const noexcept { return masked_; }
  // Ordinal of each voxel among masked voxels, or -1 if unmasked.
  const std::vector<std::int64_t>& ordinals() const noexcept { return ordinal_; }

  // Values at masked voxels in column-major order.
  std::vector<double> masked_values() const;
  // Same grid and mask, data replaced from a masked-order vector; unmasked voxels are 0.
  MaskedVolume with_masked_values(const std::vector<double>& values) const;

 private:
  void index_mask();

  Grid3 grid_{};
  std::vector<std::uint8_t> mask_;
  std::vector<double> data_;
  std::vector<std::size_t> masked_;
  std::vector<std::int64_t> ordinal_;
};

// One voxel per row: i,j,k,x,y,z,value,mask
void write_volume_csv(const MaskedVolume& vol, std::ostream& out);
void write_volume_csv(const MaskedVolume& vol, const std::string& path);

}  // namespace dualres
