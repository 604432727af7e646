#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "dualres/fft.hpp"
#include "dualres/grid.hpp"
#include "dualres/kernel.hpp"
#include "dualres/parallel.hpp"

namespace dualres {

// Per axis: smallest power of two >= 2 (d - 1); axes of length 1 stay 1.
std::array<std::int64_t, 3> extended_dims(const std::array<std::int64_t, 3>& d);

struct EmbeddingOptions {
  // Remedies for a non-positive-definite embedding, tried in order.
  bool allow_grow = false;   // double the extended dims once
  bool allow_clamp = false;  // raise eigenvalues below clamp_eps * max to that floor
  double clamp_eps = 1e-10;
};

// Stationary kernel wrapped onto a torus that contains the source grid.
// The covariance of the extended field is the (nested block-)circulant
// matrix C whose first column is `base()`; C = F^H diag(eigvals) F with F
// the unitary 3D DFT. Immutable once built and shareable across threads.
class CirculantEmbedding {
 public:
  // `brain` lists linear indices (in `grid`) of the voxels that carry
  // data, in increasing order.
  CirculantEmbedding(const Grid3& grid, const KernelParams& params,
                     const std::vector<std::size_t>& brain, EmbeddingOptions opts = {});

  const std::array<std::int64_t, 3>& source_dims() const noexcept { return source_dims_; }
  const std::array<std::int64_t, 3>& extended_dims() const noexcept { return fft_->dims(); }
  std::size_t size() const noexcept { return fft_->size(); }
  const std::vector<double>& base() const noexcept { return base_; }
  const std::vector<double>& eigvals() const noexcept { return eig_; }
  double min_eig() const noexcept { return min_eig_; }
  double max_imag_eig() const noexcept { return max_imag_; }
  bool usable() const noexcept { return min_eig_ > 0.0; }
  // Human-readable notes about remedies applied during construction.
  const std::vector<std::string>& notes() const noexcept { return notes_; }
  const KernelParams& params() const noexcept { return params_; }

  // Extended-grid linear index of each brain voxel, strictly increasing.
  const std::vector<std::size_t>& brain_index_map() const noexcept { return brain_map_; }
  std::size_t brain_size() const noexcept { return brain_map_.size(); }

  const Fft3& fft() const noexcept { return *fft_; }

  // Unitary transforms: F u and F^H v.
  ComplexField to_fourier(const ComplexField& u) const;
  ComplexField from_fourier(const ComplexField& v) const;
  void to_fourier_inplace(ComplexField& u) const;
  void from_fourier_inplace(ComplexField& v) const;

 private:
  void compute(const Grid3& grid, std::array<std::int64_t, 3> ext);

  KernelParams params_;
  std::array<std::int64_t, 3> source_dims_{};
  std::shared_ptr<const Fft3> fft_;
  std::vector<double> base_;
  std::vector<double> eig_;
  double min_eig_ = 0.0;
  double max_imag_ = 0.0;
  std::vector<std::size_t> brain_map_;
  std::vector<std::string> notes_;
};

// u^H C^{-1} u with compensated summation over the spectrum.
double quad_form(const CirculantEmbedding& emb, const ComplexField& u);
ComplexField cinv_mul(const CirculantEmbedding& emb, const ComplexField& u);
ComplexField cmul(const CirculantEmbedding& emb, const ComplexField& u);

// Draw u ~ CN(0, C): Re(u) and Im(u) are independent N(0, C) fields.
ComplexField sample_prior(const CirculantEmbedding& emb, Rng& rng);

// Gather Re(u) at brain voxels / scatter brain values into a zero field.
std::vector<double> restrict_real(const CirculantEmbedding& emb, const ComplexField& u);
ComplexField embed(const CirculantEmbedding& emb, const std::vector<double>& brain_values);

// Debug dump: three little-endian uint64 extended dims, then base and
// eigenvalues as little-endian float64 arrays.
void write_embedding_dump(const CirculantEmbedding& emb, const std::string& path);

}  // namespace dualres
