#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dualres/circulant.hpp"
#include "dualres/posterior.hpp"

namespace dualres {

struct HmcConfig {
  int L = 25;
  double target_accept = 0.65;
  int warmup = 1000;
  // Sampling iterations after warmup; kept rows = iterations / thin.
  int iterations = 3000;
  int thin = 3;
  double jitter_lo = 0.9;
  double jitter_hi = 1.1;
  int chains = 3;
  std::uint64_t seed = 1;
  int threads = 1;
  // Initial step size; <= 0 picks one with a doubling/halving search.
  double initial_eps = 0.0;
  // Store the full complex field every `snapshot_every` kept draws (0: off).
  int snapshot_every = 0;

  void validate() const;
};

struct HmcStep {
  bool accepted = false;
  double accept_prob = 0.0;
  double h_start = 0.0;
  double h_end = 0.0;
};

// One iteration of mass-preconditioned HMC on u with sigma^2 held fixed.
// Momentum p ~ CN(0, F^H diag(lambda_M) F), lambda_M = 1/sigma_h^2 + 1/lambda.
// Non-finite energies are rejected.
HmcStep hmc_update(ModelState& state, const ModelData& data, const CirculantEmbedding& emb,
                   double eps, int L, Rng& rng);

// Leapfrog trajectory without the accept step, for integrator checks.
// `p` is the momentum in real space and is updated in place.
void leapfrog(ModelState& state, ComplexField& p, const ModelData& data,
              const CirculantEmbedding& emb, double eps, int L);

// Total energy -log posterior(u) + p^H M^{-1} p / 2 at fixed sigma^2.
double hamiltonian(const ModelState& state, const ComplexField& p, const ModelData& data,
                   const CirculantEmbedding& emb);

// Nesterov dual averaging of log eps toward a target acceptance.
class DualAveraging {
 public:
  explicit DualAveraging(double eps_init, double target = 0.65, double gamma = 0.05,
                         double t0 = 10.0, double kappa = 0.75);
  // Feed one acceptance statistic; returns the step size for the next iteration.
  double update(double accept_prob);
  double current() const noexcept { return eps_; }
  double averaged() const noexcept { return eps_bar_; }

 private:
  double mu_, target_, gamma_, t0_, kappa_;
  double h_bar_ = 0.0;
  double log_eps_bar_ = 0.0;
  double eps_;
  double eps_bar_;
  int m_ = 0;
};

inline constexpr double kMinStep = 1e-8;
inline constexpr double kMaxStep = 1e3;

// Replays a warmup acceptance history through dual averaging and returns
// the frozen step size. Requires at least 10 entries.
double warmup_step_size(std::span<const double> history, double eps_init, double target = 0.65);

struct IterationRecord {
  int iteration = 0;
  bool warmup = false;
  double eps = 0.0;
  double accept_prob = 0.0;
  bool accepted = false;
  double energy = 0.0;
  double sigma_h_sq = 0.0;
  double sigma_s_sq = 0.0;
  bool restriction_ok = true;
};

struct PosteriorDraws {
  std::size_t n_voxels = 0;
  // Kept draws of Re(mu_h), row-major (draw, voxel).
  std::vector<double> mu;
  std::vector<double> sigma_h_sq;
  std::vector<double> sigma_s_sq;
  std::vector<double> accept_prob;
  std::vector<std::uint8_t> restriction_ok;
  std::vector<IterationRecord> telemetry;
  std::vector<ComplexField> snapshots;
  double eps0 = 0.0;
  bool has_std = false;
  bool failed = false;
  std::string error;

  std::size_t n_draws() const noexcept { return n_voxels ? mu.size() / n_voxels : 0; }
  std::span<const double> draw(std::size_t g) const {
    return {mu.data() + g * n_voxels, n_voxels};
  }
  // Mean acceptance probability over post-warmup iterations.
  double post_warmup_accept() const;
  // Fraction of kept draws with sigma_h^2 > sigma_s^2.
  double restriction_rate() const;
};

// Starting state: u = embed(Y_h / 2) (unobserved voxels zero), sigma^2 at
// half the empirical variances.
ModelState initial_state(const ModelData& data, const CirculantEmbedding& emb);

// Runs config.chains independent chains; chain c uses RNG stream c of
// config.seed. A failing chain is marked and does not affect the others.
std::vector<PosteriorDraws> run_chains(const ModelData& data, const CirculantEmbedding& emb,
                                       const HmcConfig& config);

// Pools kept draws from the non-failed chains.
PosteriorDraws pool_chains(const std::vector<PosteriorDraws>& chains);

}  // namespace dualres
