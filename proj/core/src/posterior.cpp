#include "dualres/posterior.hpp"

#include <cmath>
#include <random>

#include "dualres/error.hpp"

namespace dualres {

std::size_t ModelData::n_h() const noexcept {
  if (observed_h.empty()) return y_h.size();
  std::size_t n = 0;
  for (auto o : observed_h) n += o != 0;
  return n;
}

void ModelData::validate(const CirculantEmbedding& emb) const {
  if (y_h.size() != emb.brain_size())
    throw UsageError("Y_h length does not match the number of brain voxels");
  if (!observed_h.empty() && observed_h.size() != y_h.size())
    throw UsageError("observation flags do not match Y_h");
  if (W != nullptr) {
    if (W->cols != y_h.size()) throw UsageError("W columns do not match the brain voxels");
    if (W->rows != y_s.size()) throw UsageError("W rows do not match Y_s");
  }
}

Residuals residuals(std::span<const double> mu_h, const ModelData& data) {
  Residuals r;
  for (std::size_t i = 0; i < mu_h.size(); ++i) {
    if (!data.observed(i)) continue;
    const double e = data.y_h[i] - mu_h[i];
    r.ssr_h += e * e;
  }
  if (data.has_std()) {
    const auto mu_s = apply_W(*data.W, mu_h);
    for (std::size_t i = 0; i < mu_s.size(); ++i) {
      const double e = data.y_s[i] - mu_s[i];
      r.ssr_s += e * e;
    }
  }
  return r;
}

double log_posterior(const ModelState& state, const ModelData& data, const CirculantEmbedding& emb) {
  data.validate(emb);
  const auto mu = restrict_real(emb, state.u);
  const auto r = residuals(mu, data);
  const double nh = static_cast<double>(data.n_h());
  double lp = -0.5 * r.ssr_h / state.sigma_h_sq - 0.5 * nh * std::log(state.sigma_h_sq) -
              std::log(state.sigma_h_sq);
  if (data.has_std()) {
    const double ns = static_cast<double>(data.y_s.size());
    lp += -0.5 * r.ssr_s / state.sigma_s_sq - 0.5 * ns * std::log(state.sigma_s_sq) -
          std::log(state.sigma_s_sq);
  }
  lp -= 0.5 * quad_form(emb, state.u);
  if (!std::isfinite(lp)) throw NumericalError("log posterior is not finite");
  return lp;
}

std::vector<double> likelihood_gradient(std::span<const double> mu_h, const ModelData& data,
                                        double sigma_h_sq, double sigma_s_sq) {
  std::vector<double> g(mu_h.size(), 0.0);
  const double ih = 1.0 / sigma_h_sq;
  for (std::size_t i = 0; i < mu_h.size(); ++i)
    if (data.observed(i)) g[i] = (data.y_h[i] - mu_h[i]) * ih;
  if (data.has_std()) {
    auto res = apply_W(*data.W, mu_h);
    const double is = 1.0 / sigma_s_sq;
    for (std::size_t i = 0; i < res.size(); ++i) res[i] = (data.y_s[i] - res[i]) * is;
    const auto back = apply_Wt(*data.W, res);
    for (std::size_t i = 0; i < g.size(); ++i) g[i] += back[i];
  }
  return g;
}

LikelihoodTerms likelihood_terms(std::span<const double> mu_h, const ModelData& data,
                                 double sigma_h_sq, double sigma_s_sq) {
  LikelihoodTerms t;
  t.grad.assign(mu_h.size(), 0.0);
  const double ih = 1.0 / sigma_h_sq;
  for (std::size_t i = 0; i < mu_h.size(); ++i) {
    if (!data.observed(i)) continue;
    const double e = data.y_h[i] - mu_h[i];
    t.ssr.ssr_h += e * e;
    t.grad[i] = e * ih;
  }
  if (data.has_std()) {
    auto res = apply_W(*data.W, mu_h);
    const double is = 1.0 / sigma_s_sq;
    for (std::size_t i = 0; i < res.size(); ++i) {
      const double e = data.y_s[i] - res[i];
      t.ssr.ssr_s += e * e;
      res[i] = e * is;
    }
    const auto back = apply_Wt(*data.W, res);
    for (std::size_t i = 0; i < t.grad.size(); ++i) t.grad[i] += back[i];
  }
  return t;
}

ComplexField grad_u(const ModelState& state, const ModelData& data, const CirculantEmbedding& emb) {
  data.validate(emb);
  const auto mu = restrict_real(emb, state.u);
  const auto gl = likelihood_gradient(mu, data, state.sigma_h_sq, state.sigma_s_sq);
  auto g = cinv_mul(emb, state.u);
  for (auto& z : g) z = -z;
  const auto& map = emb.brain_index_map();
  for (std::size_t n = 0; n < map.size(); ++n) g[map[n]] += gl[n];
  return g;
}

double sample_inverse_gamma(double shape, double scale, Rng& rng) {
  std::gamma_distribution<double> gamma(shape, 1.0 / scale);
  return 1.0 / gamma(rng);
}

std::pair<double, double> update_sigmas(const ModelState& state, const ModelData& data,
                                        const CirculantEmbedding& emb, Rng& rng) {
  data.validate(emb);
  const auto mu = restrict_real(emb, state.u);
  const auto r = residuals(mu, data);
  if (!(r.ssr_h > 0.0)) throw NumericalError("zero high-resolution residual sum of squares");
  const double sh = sample_inverse_gamma(0.5 * static_cast<double>(data.n_h()), 0.5 * r.ssr_h, rng);
  double ss = state.sigma_s_sq;
  if (data.has_std()) {
    if (!(r.ssr_s > 0.0)) throw NumericalError("zero standard-resolution residual sum of squares");
    ss = sample_inverse_gamma(0.5 * static_cast<double>(data.y_s.size()), 0.5 * r.ssr_s, rng);
  }
  return {sh, ss};
}

}  // namespace dualres
