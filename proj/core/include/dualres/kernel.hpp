#pragma once

namespace dualres {

// Isotropic radial-basis covariance  k(d) = tau_sq * exp(-psi * d^nu).
// nu = 1 is the Exponential kernel, nu = 2 the Gaussian kernel.
struct KernelParams {
  double tau_sq = 1.0;
  double psi = 1.0;
  double nu = 1.0;

  KernelParams() = default;
  KernelParams(double tau_sq_, double psi_, double nu_);

  double operator()(double d) const noexcept;
  double correlation(double d) const noexcept;
  bool operator==(const KernelParams&) const = default;
};

bool valid(const KernelParams& p) noexcept;

inline double covariance(const KernelParams& p, double d) noexcept { return p(d); }

// Full width at half maximum of the correlation: 2 (ln 2 / psi)^(1/nu).
double fwhm(const KernelParams& p) noexcept;
KernelParams params_from_fwhm(double fwhm_mm, double nu, double tau_sq);

// Distance beyond which the correlation is below `level`.
double correlation_radius(const KernelParams& p, double level) noexcept;

}  // namespace dualres
