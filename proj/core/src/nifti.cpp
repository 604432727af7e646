#include "dualres/nifti.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <memory>
#include <vector>

#include "dualres/error.hpp"

namespace dualres {
namespace {

constexpr std::size_t kHeaderSize = 348;
constexpr float kVoxOffset = 352.0f;
constexpr std::int16_t kDtFloat32 = 16;
constexpr std::int16_t kDtFloat64 = 64;

static_assert(std::endian::native == std::endian::little,
              "NIfTI I/O assumes a little-endian host");

struct GzFile {
  gzFile f = nullptr;
  ~GzFile() {
    if (f) gzclose(f);
  }
};

template <typename T>
T byteswap(T v) {
  std::array<unsigned char, sizeof(T)> b;
  std::memcpy(b.data(), &v, sizeof(T));
  std::reverse(b.begin(), b.end());
  std::memcpy(&v, b.data(), sizeof(T));
  return v;
}

class HeaderView {
 public:
  HeaderView(const unsigned char* buf, bool swap) : buf_(buf), swap_(swap) {}

  template <typename T>
  T get(std::size_t offset) const {
    T v;
    std::memcpy(&v, buf_ + offset, sizeof(T));
    return swap_ ? byteswap(v) : v;
  }

 private:
  const unsigned char* buf_;
  bool swap_;
};

template <typename T>
void put(std::vector<unsigned char>& buf, std::size_t offset, T v) {
  std::memcpy(buf.data() + offset, &v, sizeof(T));
}

std::vector<unsigned char> read_all(const std::string& path) {
  GzFile gz;
  gz.f = gzopen(path.c_str(), "rb");
  if (!gz.f) throw IoError("cannot open " + path);
  std::vector<unsigned char> out;
  std::array<unsigned char, 1 << 16> chunk;
  for (;;) {
    const int n = gzread(gz.f, chunk.data(), static_cast<unsigned>(chunk.size()));
    if (n < 0) throw IoError("read error in " + path);
    if (n == 0) break;
    out.insert(out.end(), chunk.begin(), chunk.begin() + n);
  }
  return out;
}

struct RawImage {
  Grid3 grid;
  std::vector<double> data;
};

RawImage parse(const std::string& path) {
  const auto bytes = read_all(path);
  if (bytes.size() < kHeaderSize) throw FormatError(path + ": truncated NIfTI header");

  std::int32_t sizeof_hdr;
  std::memcpy(&sizeof_hdr, bytes.data(), 4);
  bool swap = false;
  if (sizeof_hdr != 348) {
    if (byteswap(sizeof_hdr) != 348)
      throw FormatError(path + ": sizeof_hdr is not 348");
    swap = true;
  }
  if (std::memcmp(bytes.data() + 344, "n+1\0", 4) != 0)
    throw FormatError(path + ": magic is not \"n+1\" (only single-file NIfTI-1 supported)");

  HeaderView h(bytes.data(), swap);
  std::array<std::int16_t, 8> dim{};
  for (int i = 0; i < 8; ++i) dim[i] = h.get<std::int16_t>(40 + 2 * i);
  if (dim[0] < 3 || dim[0] > 4 || (dim[0] == 4 && dim[4] != 1))
    throw FormatError(path + ": only 3D scalar volumes are supported");
  for (int a = 1; a <= 3; ++a)
    if (dim[a] < 1) throw FormatError(path + ": non-positive dimension");

  const auto datatype = h.get<std::int16_t>(70);
  if (datatype != kDtFloat32 && datatype != kDtFloat64)
    throw FormatError(path + ": unsupported datatype code " + std::to_string(datatype) +
                      " (need 16=float32 or 64=float64)");

  Vec3 vs{};
  for (int a = 0; a < 3; ++a) {
    vs[a] = std::abs(static_cast<double>(h.get<float>(80 + 4 * a)));
    if (!(vs[a] > 0.0)) vs[a] = 1.0;
  }

  Vec3 origin{0.0, 0.0, 0.0};
  const auto qform_code = h.get<std::int16_t>(252);
  const auto sform_code = h.get<std::int16_t>(254);
  if (sform_code > 0) {
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) {
        const double m = h.get<float>(280 + 16 * r + 4 * c);
        if (r != c && m != 0.0)
          throw FormatError(path + ": sform contains rotation or shear");
        if (r == c && m < 0.0)
          throw FormatError(path + ": sform flips axis " + std::to_string(r));
      }
      origin[r] = h.get<float>(280 + 16 * r + 12);
    }
  } else if (qform_code > 0) {
    for (int q = 0; q < 3; ++q)
      if (h.get<float>(256 + 4 * q) != 0.0f)
        throw FormatError(path + ": qform contains rotation");
    if (h.get<float>(76) < 0.0f) throw FormatError(path + ": qform flips the z axis");
    for (int a = 0; a < 3; ++a) origin[a] = h.get<float>(268 + 4 * a);
  }

  Grid3 grid({dim[1], dim[2], dim[3]}, vs, origin);
  const auto offset = static_cast<std::size_t>(h.get<float>(108));
  const std::size_t width = datatype == kDtFloat32 ? 4 : 8;
  const std::size_t n = grid.size();
  if (offset < kHeaderSize || bytes.size() < offset + n * width)
    throw FormatError(path + ": data section truncated");

  double slope = h.get<float>(112);
  double inter = h.get<float>(116);
  const bool scaled = std::isfinite(slope) && slope != 0.0 && !(slope == 1.0 && inter == 0.0);

  std::vector<double> data(n);
  const unsigned char* p = bytes.data() + offset;
  for (std::size_t i = 0; i < n; ++i) {
    double v;
    if (width == 4) {
      float f;
      std::memcpy(&f, p + 4 * i, 4);
      v = swap ? byteswap(f) : f;
    } else {
      std::memcpy(&v, p + 8 * i, 8);
      if (swap) v = byteswap(v);
    }
    data[i] = scaled ? v * slope + inter : v;
  }
  return {grid, std::move(data)};
}

}  // namespace

MaskedVolume read_nifti(const std::string& path, const std::optional<std::string>& mask_path) {
  auto img = parse(path);
  if (!mask_path) return MaskedVolume::from_data(img.grid, std::move(img.data));

  auto m = parse(*mask_path);
  if (m.grid.dims != img.grid.dims)
    throw FormatError(*mask_path + ": mask dimensions do not match " + path);
  std::vector<std::uint8_t> mask(m.data.size());
  for (std::size_t i = 0; i < mask.size(); ++i)
    mask[i] = std::isfinite(m.data[i]) && m.data[i] != 0.0;
  return MaskedVolume(img.grid, std::move(mask), std::move(img.data));
}

void write_nifti(const MaskedVolume& vol, const std::string& path, NiftiDataType type) {
  const auto& g = vol.grid();
  for (int a = 0; a < 3; ++a)
    if (g.dims[a] > 32767) throw FormatError("grid too large for NIfTI-1");
  for (auto lin : vol.masked_indices())
    if (!std::isfinite(vol.data()[lin]))
      throw FormatError("refusing to write non-finite value inside the mask to " + path);

  const bool f32 = type == NiftiDataType::Float32;
  std::vector<unsigned char> hdr(static_cast<std::size_t>(kVoxOffset), 0);
  put<std::int32_t>(hdr, 0, 348);
  hdr[38] = 'r';  // regular
  put<std::int16_t>(hdr, 40, 3);
  for (int a = 0; a < 3; ++a) put<std::int16_t>(hdr, 42 + 2 * a, static_cast<std::int16_t>(g.dims[a]));
  for (int a = 4; a < 8; ++a) put<std::int16_t>(hdr, 40 + 2 * a, 1);
  put<std::int16_t>(hdr, 70, f32 ? kDtFloat32 : kDtFloat64);
  put<std::int16_t>(hdr, 72, f32 ? 32 : 64);
  put<float>(hdr, 76, 1.0f);
  for (int a = 0; a < 3; ++a) put<float>(hdr, 80 + 4 * a, static_cast<float>(g.voxel_size[a]));
  put<float>(hdr, 108, kVoxOffset);
  put<float>(hdr, 112, 1.0f);
  hdr[123] = 2;  // NIFTI_UNITS_MM
  put<std::int16_t>(hdr, 252, 1);
  put<std::int16_t>(hdr, 254, 1);
  for (int a = 0; a < 3; ++a) put<float>(hdr, 268 + 4 * a, static_cast<float>(g.origin[a]));
  for (int r = 0; r < 3; ++r) {
    put<float>(hdr, 280 + 16 * r + 4 * r, static_cast<float>(g.voxel_size[r]));
    put<float>(hdr, 280 + 16 * r + 12, static_cast<float>(g.origin[r]));
  }
  std::memcpy(hdr.data() + 344, "n+1\0", 4);

  const std::size_t n = g.size();
  std::vector<unsigned char> body(n * (f32 ? 4 : 8));
  for (std::size_t i = 0; i < n; ++i) {
    const double v = vol.in_mask(i) ? vol.data()[i] : 0.0;
    if (f32) {
      const float f = static_cast<float>(v);
      std::memcpy(body.data() + 4 * i, &f, 4);
    } else {
      std::memcpy(body.data() + 8 * i, &v, 8);
    }
  }

  const bool gz = path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
  GzFile out;
  out.f = gzopen(path.c_str(), gz ? "wb6" : "wbT");
  if (!out.f) throw IoError("cannot open " + path + " for writing");
  if (gzwrite(out.f, hdr.data(), static_cast<unsigned>(hdr.size())) != static_cast<int>(hdr.size()) ||
      gzwrite(out.f, body.data(), static_cast<unsigned>(body.size())) != static_cast<int>(body.size()))
    throw IoError("write error on " + path);
  if (gzclose(out.f) != Z_OK) {
    out.f = nullptr;
    throw IoError("close error on " + path);
  }
  out.f = nullptr;
}

}  // namespace dualres
