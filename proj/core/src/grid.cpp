#include "dualres/grid.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <stdexcept>

#include "dualres/error.hpp"

namespace dualres {

Grid3::Grid3(std::array<std::int64_t, 3> d, Vec3 vs, Vec3 o)
    : dims(d), voxel_size(vs), origin(o) {
  for (int a = 0; a < 3; ++a) {
    if (dims[a] < 1) throw UsageError("grid dimension must be >= 1");
    if (!(voxel_size[a] > 0.0) || !std::isfinite(voxel_size[a]))
      throw UsageError("voxel size must be positive and finite");
    if (!std::isfinite(origin[a])) throw UsageError("grid origin must be finite");
  }
}

bool Grid3::contains(const Index3& idx) const noexcept {
  for (int a = 0; a < 3; ++a)
    if (idx[a] < 0 || idx[a] >= dims[a]) return false;
  return true;
}

Index3 Grid3::unravel(std::size_t lin) const noexcept {
  const auto l = static_cast<std::int64_t>(lin);
  return {l % dims[0], (l / dims[0]) % dims[1], l / (dims[0] * dims[1])};
}

Vec3 world_coords(const Grid3& grid, const Index3& index) {
  if (!grid.contains(index)) throw std::out_of_range("voxel index outside grid");
  Vec3 w{};
  for (int a = 0; a < 3; ++a)
    w[a] = grid.origin[a] + static_cast<double>(index[a]) * grid.voxel_size[a];
  return w;
}

double distance(const Vec3& a, const Vec3& b) noexcept {
  const double dx = a[0] - b[0], dy = a[1] - b[1], dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

MaskedVolume::MaskedVolume(Grid3 grid, std::vector<std::uint8_t> mask,
                           std::vector<double> data)
    : grid_(grid), mask_(std::move(mask)), data_(std::move(data)) {
  if (mask_.size() != grid_.size() || data_.size() != grid_.size())
    throw UsageError("mask/data length does not match grid size");
  index_mask();
}

MaskedVolume MaskedVolume::from_data(Grid3 grid, std::vector<double> data) {
  std::vector<std::uint8_t> mask(data.size());
  for (std::size_t i = 0; i < data.size(); ++i)
    mask[i] = std::isfinite(data[i]) && data[i] != 0.0;
  return MaskedVolume(grid, std::move(mask), std::move(data));
}

void MaskedVolume::index_mask() {
  masked_.clear();
  ordinal_.assign(mask_.size(), -1);
  for (std::size_t i = 0; i < mask_.size(); ++i) {
    if (mask_[i]) {
      ordinal_[i] = static_cast<std::int64_t>(masked_.size());
      masked_.push_back(i);
    }
  }
}

std::vector<double> MaskedVolume::masked_values() const {
  std::vector<double> out;
  out.reserve(masked_.size());
  for (auto i : masked_) out.push_back(data_[i]);
  return out;
}

MaskedVolume MaskedVolume::with_masked_values(const std::vector<double>& values) const {
  if (values.size() != masked_.size())
    throw UsageError("value count does not match mask cardinality");
  std::vector<double> d(grid_.size(), 0.0);
  for (std::size_t n = 0; n < masked_.size(); ++n) d[masked_[n]] = values[n];
  return MaskedVolume(grid_, mask_, std::move(d));
}

void write_volume_csv(const MaskedVolume& vol, std::ostream& out) {
  out << "i,j,k,x,y,z,value,mask\n";
  out << std::setprecision(17);
  const auto& g = vol.grid();
  for (std::size_t lin = 0; lin < g.size(); ++lin) {
    const auto idx = g.unravel(lin);
    const auto w = world_coords(g, idx);
    out << idx[0] << ',' << idx[1] << ',' << idx[2] << ',' << w[0] << ',' << w[1]
        << ',' << w[2] << ',' << vol.data()[lin] << ',' << int(vol.mask()[lin]) << '\n';
  }
}

void write_volume_csv(const MaskedVolume& vol, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw IoError("cannot open " + path + " for writing");
  write_volume_csv(vol, f);
}

}  // namespace dualres
