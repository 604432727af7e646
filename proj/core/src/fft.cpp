#include "dualres/fft.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace dualres {
namespace detail {
void* fft_malloc(std::size_t bytes) { return fftw_malloc(bytes); }
void fft_free(void* p) noexcept { fftw_free(p); }
}  // namespace detail

namespace {
// FFTW's planner is not re-entrant.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

struct Fft3::Plans {
  fftw_plan fwd_in = nullptr, fwd_out = nullptr, bwd_in = nullptr, bwd_out = nullptr;
};

Fft3::Fft3(std::array<std::int64_t, 3> dims)
    : dims_(dims), n_(static_cast<std::size_t>(dims[0] * dims[1] * dims[2])),
      plans_(std::make_unique<Plans>()) {
  // FFTW is row-major; column-major data with x fastest is the reversed shape.
  const int shape[3] = {static_cast<int>(dims[2]), static_cast<int>(dims[1]),
                        static_cast<int>(dims[0])};
  ComplexField a(n_), b(n_);
  auto* pa = reinterpret_cast<fftw_complex*>(a.data());
  auto* pb = reinterpret_cast<fftw_complex*>(b.data());
  // ESTIMATE keeps plan selection (and thus rounding) deterministic.
  const unsigned flags = FFTW_ESTIMATE;
  std::lock_guard lock(planner_mutex());
  plans_->fwd_in = fftw_plan_dft(3, shape, pa, pa, FFTW_FORWARD, flags);
  plans_->fwd_out = fftw_plan_dft(3, shape, pa, pb, FFTW_FORWARD, flags);
  plans_->bwd_in = fftw_plan_dft(3, shape, pa, pa, FFTW_BACKWARD, flags);
  plans_->bwd_out = fftw_plan_dft(3, shape, pa, pb, FFTW_BACKWARD, flags);
  if (!plans_->fwd_in || !plans_->fwd_out || !plans_->bwd_in || !plans_->bwd_out)
    throw std::runtime_error("FFTW planning failed");
}

Fft3::~Fft3() {
  std::lock_guard lock(planner_mutex());
  for (auto p : {plans_->fwd_in, plans_->fwd_out, plans_->bwd_in, plans_->bwd_out})
    if (p) fftw_destroy_plan(p);
}

void Fft3::forward(const cplx* in, cplx* out) const {
  auto* i = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in));
  auto* o = reinterpret_cast<fftw_complex*>(out);
  fftw_execute_dft(in == out ? plans_->fwd_in : plans_->fwd_out, i, o);
}

void Fft3::backward(const cplx* in, cplx* out) const {
  auto* i = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in));
  auto* o = reinterpret_cast<fftw_complex*>(out);
  fftw_execute_dft(in == out ? plans_->bwd_in : plans_->bwd_out, i, o);
}

}  // namespace dualres
