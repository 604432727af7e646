#include "dualres/circulant.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "dualres/error.hpp"

namespace dualres {

std::array<std::int64_t, 3> extended_dims(const std::array<std::int64_t, 3>& d) {
  std::array<std::int64_t, 3> out{};
  for (int a = 0; a < 3; ++a) {
    if (d[a] < 1) throw UsageError("grid dimension must be >= 1");
    const std::int64_t need = 2 * (d[a] - 1);
    std::int64_t p = 1;
    while (p < need) p *= 2;
    out[a] = p;
  }
  return out;
}

CirculantEmbedding::CirculantEmbedding(const Grid3& grid, const KernelParams& params,
                                       const std::vector<std::size_t>& brain,
                                       EmbeddingOptions opts)
    : params_(params), source_dims_(grid.dims) {
  if (!valid(params)) throw UsageError("invalid kernel parameters");
  auto ext = dualres::extended_dims(grid.dims);
  compute(grid, ext);

  if (!usable() && opts.allow_grow) {
    const double before = min_eig_;
    for (int a = 0; a < 3; ++a)
      if (grid.dims[a] > 1) ext[a] *= 2;
    compute(grid, ext);
    std::ostringstream msg;
    msg << "embedding grown to " << ext[0] << "x" << ext[1] << "x" << ext[2]
        << " (min eigenvalue " << before << " -> " << min_eig_ << ")";
    notes_.push_back(msg.str());
  }
  if (!usable() && opts.allow_clamp) {
    const double floor = opts.clamp_eps * *std::max_element(eig_.begin(), eig_.end());
    std::size_t clamped = 0;
    for (auto& l : eig_) {
      if (l < floor) {
        l = floor;
        ++clamped;
      }
    }
    std::ostringstream msg;
    msg << "clamped " << clamped << " eigenvalues below " << floor
        << " (min was " << min_eig_ << ")";
    notes_.push_back(msg.str());
    min_eig_ = floor;
  }
  if (!usable()) {
    std::ostringstream msg;
    msg << "circulant embedding is not positive definite (min eigenvalue " << min_eig_
        << "); try growing the extended grid or clamping small eigenvalues";
    throw EmbeddingError(msg.str(), min_eig_);
  }

  const auto& e = fft_->dims();
  brain_map_.reserve(brain.size());
  for (auto lin : brain) {
    if (lin >= grid.size()) throw UsageError("brain voxel index outside source grid");
    const auto idx = grid.unravel(lin);
    brain_map_.push_back(static_cast<std::size_t>(idx[0] + e[0] * (idx[1] + e[1] * idx[2])));
  }
  if (!std::is_sorted(brain_map_.begin(), brain_map_.end()) ||
      std::adjacent_find(brain_map_.begin(), brain_map_.end()) != brain_map_.end())
    throw UsageError("brain voxel indices must be strictly increasing");
}

void CirculantEmbedding::compute(const Grid3& grid, std::array<std::int64_t, 3> ext) {
  fft_ = std::make_shared<const Fft3>(ext);
  const std::size_t n = fft_->size();
  base_.assign(n, 0.0);

  // Offset along an axis is the distance to the nearer wrap image.
  auto fold = [](std::int64_t i, std::int64_t len) { return std::min(i, len - i); };
  std::size_t h = 0;
  for (std::int64_t k = 0; k < ext[2]; ++k) {
    const double dz = static_cast<double>(fold(k, ext[2])) * grid.voxel_size[2];
    for (std::int64_t j = 0; j < ext[1]; ++j) {
      const double dy = static_cast<double>(fold(j, ext[1])) * grid.voxel_size[1];
      for (std::int64_t i = 0; i < ext[0]; ++i, ++h) {
        const double dx = static_cast<double>(fold(i, ext[0])) * grid.voxel_size[0];
        base_[h] = params_(std::sqrt(dx * dx + dy * dy + dz * dz));
      }
    }
  }

  ComplexField spec(base_.begin(), base_.end());
  fft_->forward(spec);
  eig_.resize(n);
  double max_re = 0.0;
  max_imag_ = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    eig_[i] = spec[i].real();
    max_re = std::max(max_re, std::abs(spec[i].real()));
    max_imag_ = std::max(max_imag_, std::abs(spec[i].imag()));
  }
  if (max_imag_ > 1e-8 * max_re)
    throw NumericalError("circulant eigenvalues have a non-negligible imaginary part");
  min_eig_ = *std::min_element(eig_.begin(), eig_.end());
}

ComplexField CirculantEmbedding::to_fourier(const ComplexField& u) const {
  ComplexField out(u.size());
  fft_->forward(u.data(), out.data());
  const double s = 1.0 / std::sqrt(static_cast<double>(size()));
  for (auto& z : out) z *= s;
  return out;
}

ComplexField CirculantEmbedding::from_fourier(const ComplexField& v) const {
  ComplexField out(v.size());
  fft_->backward(v.data(), out.data());
  const double s = 1.0 / std::sqrt(static_cast<double>(size()));
  for (auto& z : out) z *= s;
  return out;
}

void CirculantEmbedding::to_fourier_inplace(ComplexField& u) const {
  fft_->forward(u);
  const double s = 1.0 / std::sqrt(static_cast<double>(size()));
  for (auto& z : u) z *= s;
}

void CirculantEmbedding::from_fourier_inplace(ComplexField& v) const {
  fft_->backward(v);
  const double s = 1.0 / std::sqrt(static_cast<double>(size()));
  for (auto& z : v) z *= s;
}

namespace {

void check_field(const CirculantEmbedding& emb, const ComplexField& u) {
  if (u.size() != emb.size()) throw UsageError("field length does not match embedding");
}

void require_usable(const CirculantEmbedding& emb) {
  if (!emb.usable())
    throw EmbeddingError("operation requires a positive-definite embedding", emb.min_eig());
}

ComplexField spectral_apply(const CirculantEmbedding& emb, const ComplexField& u, bool invert) {
  check_field(emb, u);
  ComplexField s(u.size());
  emb.fft().forward(u.data(), s.data());
  const auto& lam = emb.eigvals();
  const double inv_n = 1.0 / static_cast<double>(emb.size());
  for (std::size_t i = 0; i < s.size(); ++i)
    s[i] *= (invert ? 1.0 / lam[i] : lam[i]) * inv_n;
  emb.fft().backward(s);
  return s;
}

}  // namespace

double quad_form(const CirculantEmbedding& emb, const ComplexField& u) {
  require_usable(emb);
  check_field(emb, u);
  ComplexField s(u.size());
  emb.fft().forward(u.data(), s.data());
  const auto& lam = emb.eigvals();
  // Kahan summation of |F u|^2 / lambda.
  double sum = 0.0, comp = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double term = std::norm(s[i]) / lam[i] - comp;
    const double t = sum + term;
    comp = (t - sum) - term;
    sum = t;
  }
  return sum / static_cast<double>(emb.size());
}

ComplexField cinv_mul(const CirculantEmbedding& emb, const ComplexField& u) {
  require_usable(emb);
  return spectral_apply(emb, u, true);
}

ComplexField cmul(const CirculantEmbedding& emb, const ComplexField& u) {
  return spectral_apply(emb, u, false);
}

ComplexField sample_prior(const CirculantEmbedding& emb, Rng& rng) {
  require_usable(emb);
  std::normal_distribution<double> normal;
  const auto& lam = emb.eigvals();
  ComplexField z(emb.size());
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double re = normal(rng);
    const double im = normal(rng);
    z[i] = cplx(re, im) * std::sqrt(lam[i]);
  }
  emb.from_fourier_inplace(z);
  return z;
}

std::vector<double> restrict_real(const CirculantEmbedding& emb, const ComplexField& u) {
  check_field(emb, u);
  std::vector<double> out;
  out.reserve(emb.brain_size());
  for (auto i : emb.brain_index_map()) out.push_back(u[i].real());
  return out;
}

ComplexField embed(const CirculantEmbedding& emb, const std::vector<double>& brain_values) {
  if (brain_values.size() != emb.brain_size())
    throw UsageError("brain value count does not match embedding brain map");
  ComplexField u(emb.size(), cplx(0.0, 0.0));
  const auto& map = emb.brain_index_map();
  for (std::size_t n = 0; n < map.size(); ++n) u[map[n]] = cplx(brain_values[n], 0.0);
  return u;
}

void write_embedding_dump(const CirculantEmbedding& emb, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  for (auto d : emb.extended_dims()) {
    const auto v = static_cast<std::uint64_t>(d);
    f.write(reinterpret_cast<const char*>(&v), sizeof v);
  }
  f.write(reinterpret_cast<const char*>(emb.base().data()),
          static_cast<std::streamsize>(emb.base().size() * sizeof(double)));
  f.write(reinterpret_cast<const char*>(emb.eigvals().data()),
          static_cast<std::streamsize>(emb.eigvals().size() * sizeof(double)));
  if (!f) throw IoError("write error on " + path);
}

}  // namespace dualres
