#include "dualres/kernel.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "dualres/error.hpp"

namespace dualres {

KernelParams::KernelParams(double tau_sq_, double psi_, double nu_)
    : tau_sq(tau_sq_), psi(psi_), nu(nu_) {
  if (!valid(*this))
    throw UsageError("invalid kernel parameters (need tau_sq > 0, psi > 0, 0 < nu <= 2): " +
                     std::to_string(tau_sq) + ", " + std::to_string(psi) + ", " +
                     std::to_string(nu));
}

bool valid(const KernelParams& p) noexcept {
  return std::isfinite(p.tau_sq) && std::isfinite(p.psi) && p.tau_sq > 0.0 &&
         p.psi > 0.0 && p.nu > 0.0 && p.nu <= 2.0;
}

double KernelParams::operator()(double d) const noexcept { return tau_sq * correlation(d); }

double KernelParams::correlation(double d) const noexcept {
  if (d <= 0.0) return 1.0;
  if (nu == 1.0) return std::exp(-psi * d);
  if (nu == 2.0) return std::exp(-psi * d * d);
  return std::exp(-psi * std::pow(d, nu));
}

double fwhm(const KernelParams& p) noexcept {
  return 2.0 * std::pow(std::numbers::ln2 / p.psi, 1.0 / p.nu);
}

KernelParams params_from_fwhm(double fwhm_mm, double nu, double tau_sq) {
  if (!(fwhm_mm > 0.0)) throw UsageError("FWHM must be positive");
  return KernelParams(tau_sq, std::numbers::ln2 * std::pow(2.0 / fwhm_mm, nu), nu);
}

double correlation_radius(const KernelParams& p, double level) noexcept {
  return std::pow(-std::log(level) / p.psi, 1.0 / p.nu);
}

}  // namespace dualres
