#include "nifti_fixture.hpp"

#include <algorithm>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace fixture {

namespace {

template <typename T>
void put(std::vector<unsigned char>& b, std::size_t off, T v, bool be) {
  unsigned char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  if (be) std::reverse(raw, raw + sizeof(T));
  std::memcpy(b.data() + off, raw, sizeof(T));
}

}  // namespace

std::vector<unsigned char> make_nifti(const NiftiSpec& s, const std::vector<unsigned char>& payload) {
  std::vector<unsigned char> b(352, 0);
  const bool be = s.big_endian;
  put<std::int32_t>(b, 0, s.sizeof_hdr, be);
  put<std::int16_t>(b, 40, 3, be);
  for (int i = 0; i < 3; ++i) put<std::int16_t>(b, 42 + 2 * i, s.dims[i], be);
  for (int i = 3; i < 7; ++i) put<std::int16_t>(b, 42 + 2 * i, 1, be);
  put<std::int16_t>(b, 70, s.datatype, be);
  put<std::int16_t>(b, 72, s.bitpix, be);
  put<float>(b, 76, 1.0f, be);
  for (int i = 0; i < 3; ++i) put<float>(b, 80 + 4 * i, s.pixdim[i], be);
  put<float>(b, 108, 352.0f, be);
  put<float>(b, 112, s.scl_slope, be);
  put<float>(b, 116, s.scl_inter, be);
  put<std::int16_t>(b, 252, s.qform_code, be);
  put<std::int16_t>(b, 254, s.sform_code, be);
  for (int i = 0; i < 3; ++i) put<float>(b, 268 + 4 * i, s.qoffset[i], be);
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 4; ++c) put<float>(b, 280 + 16 * r + 4 * c, s.srow[r][c], be);
  std::memcpy(b.data() + 344, s.magic.data(), std::min<std::size_t>(s.magic.size(), 4));
  b.insert(b.end(), payload.begin(), payload.end());
  return b;
}

std::vector<unsigned char> float32_payload(const std::vector<float>& v, bool big_endian) {
  std::vector<unsigned char> out(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    unsigned char raw[4];
    std::memcpy(raw, &v[i], 4);
    if (big_endian) std::reverse(raw, raw + 4);
    std::memcpy(out.data() + 4 * i, raw, 4);
  }
  return out;
}

void write_file(const std::string& path, const std::vector<unsigned char>& bytes) {
  std::ofstream f(path, std::ios::binary);
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw std::runtime_error("cannot write fixture " + path);
}

std::vector<unsigned char> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

std::string temp_path(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / "dualres_tests";
  std::filesystem::create_directories(dir);
  return (dir / name).string();
}

}  // namespace fixture
