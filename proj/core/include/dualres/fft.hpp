#pragma once

#include <array>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <new>
#include <vector>

namespace dualres {

using cplx = std::complex<double>;

namespace detail {
void* fft_malloc(std::size_t bytes);
void fft_free(void* p) noexcept;
}  // namespace detail

// Allocator returning SIMD-aligned storage so FFT plans can be reused on
// any buffer.
template <typename T>
struct FftAllocator {
  using value_type = T;
  FftAllocator() = default;
  template <typename U>
  FftAllocator(const FftAllocator<U>&) noexcept {}
  T* allocate(std::size_t n) {
    if (auto* p = detail::fft_malloc(n * sizeof(T))) return static_cast<T*>(p);
    throw std::bad_alloc();
  }
  void deallocate(T* p, std::size_t) noexcept { detail::fft_free(p); }
  template <typename U>
  bool operator==(const FftAllocator<U>&) const noexcept { return true; }
};

// A complex field on an extended (toroidal) grid, column-major.
using ComplexField = std::vector<cplx, FftAllocator<cplx>>;

// 3D complex DFT over column-major data of the given dims.
// forward:  X_k = sum_n x_n exp(-2 pi i k.n / N)   (unnormalized)
// backward: x_n = sum_k X_k exp(+2 pi i k.n / N)   (unnormalized)
// Instances are immutable after construction; execute() is safe to call
// concurrently on distinct buffers.
class Fft3 {
 public:
  explicit Fft3(std::array<std::int64_t, 3> dims);
  ~Fft3();
  Fft3(const Fft3&) = delete;
  Fft3& operator=(const Fft3&) = delete;

  std::size_t size() const noexcept { return n_; }
  const std::array<std::int64_t, 3>& dims() const noexcept { return dims_; }

  void forward(const cplx* in, cplx* out) const;
  void backward(const cplx* in, cplx* out) const;
  void forward(ComplexField& inout) const { forward(inout.data(), inout.data()); }
  void backward(ComplexField& inout) const { backward(inout.data(), inout.data()); }

 private:
  struct Plans;
  std::array<std::int64_t, 3> dims_;
  std::size_t n_;
  std::unique_ptr<Plans> plans_;
};

}  // namespace dualres
