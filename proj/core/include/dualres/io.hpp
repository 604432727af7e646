#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "dualres/hmc.hpp"
#include "dualres/kernel.hpp"

namespace dualres {

// Flat "key = value" files; '#' starts a comment, blank lines are ignored,
// values may be double-quoted. Throws FormatError on malformed lines and
// duplicate keys.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::istream& in, const std::string& origin = "<stream>");
KeyValues read_key_values(const std::string& path);

// Kernel parameter file with keys tau_sq, psi, nu (extra keys allowed).
KernelParams read_theta(const std::string& path);
KernelParams theta_from(const KeyValues& kv, const std::string& origin = "<theta>");
void write_theta(const std::string& path, const KernelParams& p, const KeyValues& extra = {});

// Binary draw matrix: little-endian uint64 n_draws, uint64 n_voxels,
// then n_draws * n_voxels float64 values in row-major order.
struct DrawMatrix {
  std::uint64_t n_draws = 0;
  std::uint64_t n_voxels = 0;
  std::vector<double> values;
};
void write_draws(const std::string& path, const PosteriorDraws& draws);
DrawMatrix read_draws(const std::string& path);
PosteriorDraws to_posterior_draws(DrawMatrix m);

// iteration,chain,warmup,eps,accept,accepted,energy,sigma_h_sq,sigma_s_sq,restriction_ok
void write_telemetry_csv(const std::string& path, const std::vector<PosteriorDraws>& chains);

// Formats a double so it parses back to the same value.
std::string format_double(double x);

}  // namespace dualres
