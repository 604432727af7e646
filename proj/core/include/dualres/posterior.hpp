#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "dualres/circulant.hpp"
#include "dualres/kriging.hpp"
#include "dualres/parallel.hpp"

namespace dualres {

// Observed data for one fit. y_h is indexed by the embedding's brain
// voxels; y_s (optional) by the rows of W.
struct ModelData {
  std::vector<double> y_h;
  // Optional per-voxel observation flags for y_h (empty: all observed).
  // Unobserved voxels stay in the latent field but leave the likelihood.
  std::vector<std::uint8_t> observed_h;
  std::vector<double> y_s;
  const KrigingWeights* W = nullptr;

  bool has_std() const noexcept { return W != nullptr && !y_s.empty(); }
  bool observed(std::size_t i) const noexcept { return observed_h.empty() || observed_h[i] != 0; }
  std::size_t n_h() const noexcept;
  void validate(const CirculantEmbedding& emb) const;
};

struct ModelState {
  ComplexField u;
  double sigma_h_sq = 1.0;
  double sigma_s_sq = 1.0;
};

// Residual sums of squares at the current Re(mu_h).
struct Residuals {
  double ssr_h = 0.0;
  double ssr_s = 0.0;
};
Residuals residuals(std::span<const double> mu_h, const ModelData& data);

// Residual sums of squares and likelihood gradient from one pass over W.
struct LikelihoodTerms {
  Residuals ssr;
  std::vector<double> grad;
};
LikelihoodTerms likelihood_terms(std::span<const double> mu_h, const ModelData& data,
                                 double sigma_h_sq, double sigma_s_sq);

// Log posterior of (u, sigma_h^2, sigma_s^2) up to an additive constant:
// Gaussian likelihoods of Y_h and Y_s, the complex prior -u^H C^{-1} u / 2,
// and the -log sigma^2 noise priors. Throws NumericalError if non-finite.
double log_posterior(const ModelState& state, const ModelData& data, const CirculantEmbedding& emb);

// Gradient with respect to (Re u, Im u), packed as a complex field.
ComplexField grad_u(const ModelState& state, const ModelData& data, const CirculantEmbedding& emb);

// Likelihood part of the gradient at brain voxels:
//   (Y_h - mu_h) / sigma_h^2 + W^T (Y_s - W mu_h) / sigma_s^2
std::vector<double> likelihood_gradient(std::span<const double> mu_h, const ModelData& data,
                                        double sigma_h_sq, double sigma_s_sq);

// Full-conditional inverse-gamma draws of the noise variances; the order
// restriction sigma_h^2 > sigma_s^2 is not imposed here. Without std data
// sigma_s^2 is returned unchanged.
std::pair<double, double> update_sigmas(const ModelState& state, const ModelData& data,
                                        const CirculantEmbedding& emb, Rng& rng);

// Draw from InverseGamma(shape, scale).
double sample_inverse_gamma(double shape, double scale, Rng& rng);

}  // namespace dualres
