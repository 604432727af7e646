#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <random>

#include "dualres/error.hpp"
#include "dualres/nifti.hpp"
#include "nifti_fixture.hpp"

using namespace dualres;
using fixture::NiftiSpec;

namespace {

MaskedVolume random_volume(std::uint64_t seed) {
  const Grid3 g({7, 5, 3}, {1.8, 1.8, 2.3}, {-12.5, 3.25, 40.0});
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  std::bernoulli_distribution keep(0.8);
  std::vector<std::uint8_t> mask(g.size());
  std::vector<double> data(g.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    mask[i] = keep(rng);
    data[i] = mask[i] ? nd(rng) : 0.0;
    if (mask[i] && data[i] == 0.0) data[i] = 1.0;
  }
  return MaskedVolume(g, std::move(mask), std::move(data));
}

}  // namespace

TEST(Nifti, ReadsHandBuiltFloat32Fixture) {
  NiftiSpec s;
  s.dims = {4, 4, 2};
  s.pixdim = {1.8f, 1.8f, 2.3f};
  s.srow = {{{1.8f, 0, 0, -10.0f}, {0, 1.8f, 0, 5.0f}, {0, 0, 2.3f, 1.5f}}};
  const auto path = fixture::temp_path("ones.nii");
  fixture::write_file(path, fixture::make_nifti(s, fixture::float32_payload(std::vector<float>(32, 1.0f))));
  const auto v = read_nifti(path);
  EXPECT_EQ(v.grid().dims, (std::array<std::int64_t, 3>{4, 4, 2}));
  EXPECT_EQ(v.count(), 32u);
  for (double x : v.data()) EXPECT_EQ(x, 1.0);
  EXPECT_NEAR(v.grid().voxel_size[2], 2.3, 1e-6);
  EXPECT_NEAR(v.grid().origin[0], -10.0, 1e-6);
  EXPECT_NEAR(v.grid().origin[1], 5.0, 1e-6);
  EXPECT_NEAR(v.grid().origin[2], 1.5, 1e-6);
}

TEST(Nifti, ReadsBigEndianFixture) {
  NiftiSpec s;
  s.dims = {2, 1, 1};
  s.big_endian = true;
  const auto path = fixture::temp_path("be.nii");
  fixture::write_file(path, fixture::make_nifti(s, fixture::float32_payload({2.5f, -1.0f}, true)));
  const auto v = read_nifti(path);
  EXPECT_EQ(v.data(), (std::vector<double>{2.5, -1.0}));
}

TEST(Nifti, QformOffsetsUsedWithoutSform) {
  NiftiSpec s;
  s.sform_code = 0;
  s.qform_code = 1;
  s.qoffset = {3.0f, -4.0f, 8.5f};
  const auto path = fixture::temp_path("qform.nii");
  fixture::write_file(path, fixture::make_nifti(s, fixture::float32_payload({1.0f})));
  const auto v = read_nifti(path);
  EXPECT_NEAR(v.grid().origin[0], 3.0, 1e-6);
  EXPECT_NEAR(v.grid().origin[1], -4.0, 1e-6);
  EXPECT_NEAR(v.grid().origin[2], 8.5, 1e-6);
}

TEST(Nifti, NoOrientationGivesZeroOrigin) {
  NiftiSpec s;
  s.sform_code = 0;
  const auto path = fixture::temp_path("noorient.nii");
  fixture::write_file(path, fixture::make_nifti(s, fixture::float32_payload({1.0f})));
  EXPECT_EQ(read_nifti(path).grid().origin, (Vec3{0.0, 0.0, 0.0}));
}

TEST(Nifti, Int16IsRejected) {
  NiftiSpec s;
  s.datatype = 4;
  s.bitpix = 16;
  const auto path = fixture::temp_path("int16.nii");
  fixture::write_file(path, fixture::make_nifti(s, {0, 1}));
  EXPECT_THROW(read_nifti(path), FormatError);
}

TEST(Nifti, BadMagicAndHeaderSizeAreRejected) {
  NiftiSpec s;
  s.magic = "ni1";
  auto path = fixture::temp_path("badmagic.nii");
  fixture::write_file(path, fixture::make_nifti(s, fixture::float32_payload({1.0f})));
  EXPECT_THROW(read_nifti(path), FormatError);

  NiftiSpec t;
  t.sizeof_hdr = 540;
  path = fixture::temp_path("badsize.nii");
  fixture::write_file(path, fixture::make_nifti(t, fixture::float32_payload({1.0f})));
  EXPECT_THROW(read_nifti(path), FormatError);
}

TEST(Nifti, RotatedSformIsRejected) {
  NiftiSpec s;
  s.srow = {{{0.7f, -0.7f, 0, 0}, {0.7f, 0.7f, 0, 0}, {0, 0, 1, 0}}};
  const auto path = fixture::temp_path("rot.nii");
  fixture::write_file(path, fixture::make_nifti(s, fixture::float32_payload({1.0f})));
  EXPECT_THROW(read_nifti(path), FormatError);
}

TEST(Nifti, TruncatedDataIsRejected) {
  NiftiSpec s;
  s.dims = {2, 2, 1};
  const auto path = fixture::temp_path("trunc.nii");
  fixture::write_file(path, fixture::make_nifti(s, fixture::float32_payload({1.0f, 2.0f})));
  EXPECT_THROW(read_nifti(path), FormatError);
}

TEST(Nifti, MissingFileIsIoError) {
  EXPECT_THROW(read_nifti(fixture::temp_path("does_not_exist.nii")), IoError);
}

TEST(Nifti, SingleVoxelPayloadIsFourBytes) {
  const MaskedVolume v(Grid3({1, 1, 1}, {1.0, 1.0, 1.0}), {1}, {3.5});
  const auto path = fixture::temp_path("one.nii");
  write_nifti(v, path);
  const auto bytes = fixture::read_file(path);
  ASSERT_EQ(bytes.size(), 352u + 4u);
  float f;
  std::memcpy(&f, bytes.data() + 352, 4);
  EXPECT_EQ(f, 3.5f);
  std::int16_t datatype;
  std::memcpy(&datatype, bytes.data() + 70, 2);
  EXPECT_EQ(datatype, 16);
  EXPECT_EQ(std::memcmp(bytes.data() + 344, "n+1\0", 4), 0);
}

TEST(Nifti, Float64RoundTripIsBitwise) {
  const auto v = random_volume(11);
  const auto path = fixture::temp_path("rt64.nii");
  write_nifti(v, path, NiftiDataType::Float64);
  const auto r = read_nifti(path);
  ASSERT_EQ(r.data().size(), v.data().size());
  EXPECT_EQ(std::memcmp(r.data().data(), v.data().data(), v.data().size() * sizeof(double)), 0);
  EXPECT_EQ(r.mask(), v.mask());
  for (int a = 0; a < 3; ++a) {
    EXPECT_EQ(r.grid().dims[a], v.grid().dims[a]);
    EXPECT_NEAR(r.grid().voxel_size[a], v.grid().voxel_size[a], 1e-6);
    EXPECT_NEAR(r.grid().origin[a], v.grid().origin[a], 1e-6);
  }
}

TEST(Nifti, Float32RoundTripOfFloatRepresentableData) {
  auto v = random_volume(12);
  for (auto& x : v.data()) x = static_cast<double>(static_cast<float>(x));
  const auto path = fixture::temp_path("rt32.nii");
  write_nifti(v, path);
  EXPECT_EQ(read_nifti(path).data(), v.data());
}

TEST(Nifti, GzipRoundTrip) {
  const auto v = random_volume(13);
  const auto path = fixture::temp_path("rt.nii.gz");
  write_nifti(v, path, NiftiDataType::Float64);
  const auto bytes = fixture::read_file(path);
  ASSERT_GE(bytes.size(), 2u);
  EXPECT_EQ(bytes[0], 0x1f);
  EXPECT_EQ(bytes[1], 0x8b);
  EXPECT_EQ(read_nifti(path).data(), v.data());
}

TEST(Nifti, UnmaskedVoxelsWrittenAsZero) {
  const MaskedVolume v(Grid3({2, 1, 1}, {1.0, 1.0, 1.0}), {1, 0}, {4.0, 7.0});
  const auto path = fixture::temp_path("unmasked.nii");
  write_nifti(v, path);
  EXPECT_EQ(read_nifti(path).data(), (std::vector<double>{4.0, 0.0}));
}

TEST(Nifti, NonFiniteMaskedValueIsRefused) {
  const MaskedVolume v(Grid3({2, 1, 1}, {1.0, 1.0, 1.0}), {1, 1}, {1.0, std::nan("")});
  EXPECT_THROW(write_nifti(v, fixture::temp_path("nan.nii")), FormatError);
}

TEST(Nifti, SeparateMaskFile) {
  const Grid3 g({3, 1, 1}, {1.0, 1.0, 1.0});
  const MaskedVolume data(g, {1, 1, 1}, {0.0, 2.0, 3.0});
  const MaskedVolume mask(g, {1, 1, 1}, {1.0, 1.0, 0.0});
  const auto dp = fixture::temp_path("mdata.nii"), mp = fixture::temp_path("mmask.nii");
  write_nifti(data, dp);
  write_nifti(mask, mp);
  const auto v = read_nifti(dp, mp);
  EXPECT_EQ(v.mask(), (std::vector<std::uint8_t>{1, 1, 0}));
  EXPECT_EQ(v.data()[0], 0.0);

  const MaskedVolume other(Grid3({2, 1, 1}, {1.0, 1.0, 1.0}), {1, 1}, {1.0, 1.0});
  const auto op = fixture::temp_path("mother.nii");
  write_nifti(other, op);
  EXPECT_THROW(read_nifti(dp, op), FormatError);
}
