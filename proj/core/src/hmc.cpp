#include "dualres/hmc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "dualres/error.hpp"

namespace dualres {

void HmcConfig::validate() const {
  if (L < 1) throw UsageError("leapfrog steps L must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw UsageError("target acceptance must lie in (0, 1)");
  if (warmup < 1) throw UsageError("warmup must be >= 1");
  if (iterations < 1) throw UsageError("iterations must be >= 1");
  if (thin < 1) throw UsageError("thin must be >= 1");
  if (chains < 1) throw UsageError("chains must be >= 1");
  if (!(jitter_lo > 0.0 && jitter_lo <= jitter_hi)) throw UsageError("invalid step-size jitter band");
}

namespace {

// Trajectory state kept in the Fourier domain: uhat = F u, phat = F p.
// Each leapfrog step costs one inverse and one forward transform.
class Integrator {
 public:
  Integrator(const ModelData& data, const CirculantEmbedding& emb, double sh, double ss)
      : data_(data), emb_(emb), sh_(sh), ss_(ss), mass_(emb.size()), g_(emb.size()) {
    const auto& lam = emb.eigvals();
    for (std::size_t k = 0; k < mass_.size(); ++k) {
      mass_[k] = 1.0 / sh + 1.0 / lam[k];
      if (!(mass_[k] > 0.0)) throw NumericalError("mass matrix is not positive definite");
    }
    const double ns = data.has_std() ? static_cast<double>(data.y_s.size()) : 0.0;
    sigma_terms_ = -0.5 * static_cast<double>(data.n_h()) * std::log(sh) - std::log(sh);
    if (data.has_std()) sigma_terms_ += -0.5 * ns * std::log(ss) - std::log(ss);
  }

  const std::vector<double>& mass() const noexcept { return mass_; }

  // Sets the position from a real-space field and refreshes the gradient.
  void set_position(const ComplexField& u) {
    u_ = u;
    uhat_ = emb_.to_fourier(u);
    refresh();
  }

  void set_momentum_hat(ComplexField phat) { phat_ = std::move(phat); }
  void set_momentum(const ComplexField& p) { phat_ = emb_.to_fourier(p); }
  ComplexField momentum() const { return emb_.from_fourier(phat_); }
  const ComplexField& position() const noexcept { return u_; }

  void run(double eps, int L) {
    const double half = 0.5 * eps;
    const auto n = mass_.size();
    for (int l = 0; l < L; ++l) {
      for (std::size_t k = 0; k < n; ++k) phat_[k] += half * g_[k];
      for (std::size_t k = 0; k < n; ++k) uhat_[k] += eps * phat_[k] / mass_[k];
      u_ = uhat_;
      emb_.from_fourier_inplace(u_);
      refresh();
      for (std::size_t k = 0; k < n; ++k) phat_[k] += half * g_[k];
    }
  }

  double potential() const noexcept { return -(loglik_ - 0.5 * prior_quad_ + sigma_terms_); }

  double kinetic() const noexcept {
    double s = 0.0, c = 0.0;
    for (std::size_t k = 0; k < mass_.size(); ++k) {
      const double y = std::norm(phat_[k]) / mass_[k] - c;
      const double t = s + y;
      c = (t - s) - y;
      s = t;
    }
    return 0.5 * s;
  }

  double hamiltonian() const noexcept { return potential() + kinetic(); }

 private:
  void refresh() {
    const auto mu = restrict_real(emb_, u_);
    const auto lt = likelihood_terms(mu, data_, sh_, ss_);
    const auto& gl = lt.grad;
    loglik_ = -0.5 * lt.ssr.ssr_h / sh_;
    if (data_.has_std()) loglik_ += -0.5 * lt.ssr.ssr_s / ss_;

    std::fill(g_.begin(), g_.end(), cplx{});
    const auto& map = emb_.brain_index_map();
    for (std::size_t i = 0; i < map.size(); ++i) g_[map[i]] = gl[i];
    emb_.to_fourier_inplace(g_);
    const auto& lam = emb_.eigvals();
    double s = 0.0, c = 0.0;
    for (std::size_t k = 0; k < g_.size(); ++k) {
      g_[k] -= uhat_[k] / lam[k];
      const double y = std::norm(uhat_[k]) / lam[k] - c;
      const double t = s + y;
      c = (t - s) - y;
      s = t;
    }
    prior_quad_ = s;
  }

  const ModelData& data_;
  const CirculantEmbedding& emb_;
  double sh_, ss_;
  std::vector<double> mass_;
  ComplexField u_, uhat_, phat_, g_;
  double loglik_ = 0.0;
  double prior_quad_ = 0.0;
  double sigma_terms_ = 0.0;
};

ComplexField draw_momentum_hat(const std::vector<double>& mass, Rng& rng) {
  std::normal_distribution<double> normal;
  ComplexField p(mass.size());
  for (std::size_t k = 0; k < mass.size(); ++k) {
    const double s = std::sqrt(mass[k]);
    const double re = normal(rng);
    const double im = normal(rng);
    p[k] = cplx(s * re, s * im);
  }
  return p;
}

double accept_probability(double h0, double h1) {
  if (!std::isfinite(h0) || !std::isfinite(h1)) return 0.0;
  const double d = h0 - h1;
  return d >= 0.0 ? 1.0 : std::exp(d);
}

// Doubles or halves eps until a single leapfrog step crosses acceptance 1/2.
double find_initial_step(const ModelState& state, const ModelData& data,
                         const CirculantEmbedding& emb, Rng& rng) {
  Integrator it(data, emb, state.sigma_h_sq, state.sigma_s_sq);
  const auto phat = draw_momentum_hat(it.mass(), rng);
  auto trial = [&](double eps) {
    it.set_position(state.u);
    it.set_momentum_hat(phat);
    const double h0 = it.hamiltonian();
    it.run(eps, 1);
    return accept_probability(h0, it.hamiltonian());
  };
  double eps = 1.0;
  const int dir = trial(eps) > 0.5 ? 1 : -1;
  for (int i = 0; i < 60; ++i) {
    const double next = dir > 0 ? eps * 2.0 : eps * 0.5;
    if (next < kMinStep || next > kMaxStep) break;
    const double a = trial(next);
    if (dir > 0 ? a <= 0.5 : a > 0.5) return dir > 0 ? eps : next;
    eps = next;
  }
  return std::clamp(eps, kMinStep, kMaxStep);
}

double variance(std::span<const double> x, const ModelData* data) {
  double n = 0.0, s = 0.0, ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (data != nullptr && !data->observed(i)) continue;
    n += 1.0;
    s += x[i];
  }
  if (n < 2.0) return 0.0;
  const double m = s / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (data != nullptr && !data->observed(i)) continue;
    ss += (x[i] - m) * (x[i] - m);
  }
  return ss / (n - 1.0);
}

}  // namespace

HmcStep hmc_update(ModelState& state, const ModelData& data, const CirculantEmbedding& emb,
                   double eps, int L, Rng& rng) {
  HmcStep step;
  Integrator it(data, emb, state.sigma_h_sq, state.sigma_s_sq);
  it.set_position(state.u);
  it.set_momentum_hat(draw_momentum_hat(it.mass(), rng));
  step.h_start = it.hamiltonian();
  it.run(eps, L);
  step.h_end = it.hamiltonian();
  step.accept_prob = accept_probability(step.h_start, step.h_end);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  if (step.accept_prob > 0.0 && unif(rng) < step.accept_prob) {
    step.accepted = true;
    state.u = it.position();
  }
  return step;
}

void leapfrog(ModelState& state, ComplexField& p, const ModelData& data,
              const CirculantEmbedding& emb, double eps, int L) {
  Integrator it(data, emb, state.sigma_h_sq, state.sigma_s_sq);
  it.set_position(state.u);
  it.set_momentum(p);
  it.run(eps, L);
  state.u = it.position();
  p = it.momentum();
}

double hamiltonian(const ModelState& state, const ComplexField& p, const ModelData& data,
                   const CirculantEmbedding& emb) {
  Integrator it(data, emb, state.sigma_h_sq, state.sigma_s_sq);
  it.set_position(state.u);
  it.set_momentum(p);
  return it.hamiltonian();
}

DualAveraging::DualAveraging(double eps_init, double target, double gamma, double t0, double kappa)
    : mu_(std::log(10.0 * eps_init)),
      target_(target),
      gamma_(gamma),
      t0_(t0),
      kappa_(kappa),
      log_eps_bar_(std::log(eps_init)),
      eps_(eps_init),
      eps_bar_(eps_init) {
  if (!(eps_init > 0.0)) throw UsageError("initial step size must be positive");
}

double DualAveraging::update(double accept_prob) {
  if (!std::isfinite(accept_prob)) accept_prob = 0.0;
  ++m_;
  const double m = static_cast<double>(m_);
  const double eta = 1.0 / (m + t0_);
  h_bar_ = (1.0 - eta) * h_bar_ + eta * (target_ - accept_prob);
  const double lo = std::log(kMinStep), hi = std::log(kMaxStep);
  const double log_eps = std::clamp(mu_ - std::sqrt(m) / gamma_ * h_bar_, lo, hi);
  const double w = std::pow(m, -kappa_);
  log_eps_bar_ = std::clamp(w * log_eps + (1.0 - w) * log_eps_bar_, lo, hi);
  eps_ = std::exp(log_eps);
  eps_bar_ = std::exp(log_eps_bar_);
  return eps_;
}

double warmup_step_size(std::span<const double> history, double eps_init, double target) {
  if (history.size() < 10) throw UsageError("warmup needs at least 10 iterations");
  DualAveraging da(eps_init, target);
  for (double a : history) da.update(a);
  return da.averaged();
}

double PosteriorDraws::post_warmup_accept() const {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : telemetry) {
    if (r.warmup) continue;
    s += r.accept_prob;
    ++n;
  }
  return n ? s / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN();
}

double PosteriorDraws::restriction_rate() const {
  if (restriction_ok.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::size_t ok = 0;
  for (auto f : restriction_ok) ok += f != 0;
  return static_cast<double>(ok) / static_cast<double>(restriction_ok.size());
}

ModelState initial_state(const ModelData& data, const CirculantEmbedding& emb) {
  data.validate(emb);
  std::vector<double> half(data.y_h.size(), 0.0);
  for (std::size_t i = 0; i < half.size(); ++i)
    if (data.observed(i)) half[i] = 0.5 * data.y_h[i];
  ModelState s;
  s.u = embed(emb, half);
  const double vh = variance(data.y_h, &data);
  s.sigma_h_sq = vh > 0.0 ? 0.5 * vh : 1.0;
  if (data.has_std()) {
    const double vs = variance(data.y_s, nullptr);
    s.sigma_s_sq = vs > 0.0 ? 0.5 * vs : 1.0;
  }
  return s;
}

namespace {

void run_one_chain(const ModelData& data, const CirculantEmbedding& emb, const HmcConfig& cfg,
                   int chain, PosteriorDraws& out) {
  Rng rng = make_rng(cfg.seed, static_cast<std::uint64_t>(chain));
  ModelState state = initial_state(data, emb);
  out.n_voxels = emb.brain_size();
  out.has_std = data.has_std();
  const std::size_t kept = static_cast<std::size_t>(cfg.iterations / cfg.thin);
  out.mu.reserve(kept * out.n_voxels);
  out.telemetry.reserve(static_cast<std::size_t>(cfg.warmup + cfg.iterations));

  const double eps_init = cfg.initial_eps > 0.0 ? cfg.initial_eps
                                                : find_initial_step(state, data, emb, rng);
  DualAveraging da(eps_init, cfg.target_accept);
  double eps = eps_init;
  std::uniform_real_distribution<double> jitter(cfg.jitter_lo, cfg.jitter_hi);

  const int total = cfg.warmup + cfg.iterations;
  for (int it = 0; it < total; ++it) {
    const bool warm = it < cfg.warmup;
    const auto [sh, ss] = update_sigmas(state, data, emb, rng);
    state.sigma_h_sq = sh;
    state.sigma_s_sq = ss;

    if (!warm) {
      if (it == cfg.warmup) out.eps0 = da.averaged();
      eps = out.eps0 * jitter(rng);
    }
    const auto step = hmc_update(state, data, emb, eps, cfg.L, rng);

    IterationRecord rec;
    rec.iteration = it;
    rec.warmup = warm;
    rec.eps = eps;
    rec.accept_prob = step.accept_prob;
    rec.accepted = step.accepted;
    rec.energy = step.accepted ? step.h_end : step.h_start;
    rec.sigma_h_sq = sh;
    rec.sigma_s_sq = ss;
    rec.restriction_ok = !data.has_std() || sh > ss;
    out.telemetry.push_back(rec);

    if (warm) {
      eps = da.update(step.accept_prob);
      continue;
    }
    const int k = it - cfg.warmup + 1;
    if (k % cfg.thin != 0) continue;
    const auto mu = restrict_real(emb, state.u);
    out.mu.insert(out.mu.end(), mu.begin(), mu.end());
    out.sigma_h_sq.push_back(sh);
    out.sigma_s_sq.push_back(ss);
    out.accept_prob.push_back(step.accept_prob);
    out.restriction_ok.push_back(rec.restriction_ok ? 1 : 0);
    if (cfg.snapshot_every > 0 && (out.sigma_h_sq.size() - 1) % cfg.snapshot_every == 0)
      out.snapshots.push_back(state.u);
  }
}

}  // namespace

std::vector<PosteriorDraws> run_chains(const ModelData& data, const CirculantEmbedding& emb,
                                       const HmcConfig& config) {
  config.validate();
  data.validate(emb);
  if (!emb.usable()) throw EmbeddingError("embedding is not positive definite", emb.min_eig());
  std::vector<PosteriorDraws> chains(static_cast<std::size_t>(config.chains));
  const int threads = std::max(1, std::min(config.threads, config.chains));
  parallel_for(chains.size(), threads, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t c = b; c < e; ++c) {
      try {
        run_one_chain(data, emb, config, static_cast<int>(c), chains[c]);
      } catch (const std::exception& ex) {
        chains[c].failed = true;
        chains[c].error = ex.what();
      }
    }
  });
  return chains;
}

PosteriorDraws pool_chains(const std::vector<PosteriorDraws>& chains) {
  PosteriorDraws out;
  for (const auto& c : chains) {
    if (c.failed) continue;
    if (out.n_voxels == 0) {
      out.n_voxels = c.n_voxels;
      out.has_std = c.has_std;
      out.eps0 = c.eps0;
    } else if (out.n_voxels != c.n_voxels) {
      throw UsageError("chains have different voxel counts");
    }
    out.mu.insert(out.mu.end(), c.mu.begin(), c.mu.end());
    out.sigma_h_sq.insert(out.sigma_h_sq.end(), c.sigma_h_sq.begin(), c.sigma_h_sq.end());
    out.sigma_s_sq.insert(out.sigma_s_sq.end(), c.sigma_s_sq.begin(), c.sigma_s_sq.end());
    out.accept_prob.insert(out.accept_prob.end(), c.accept_prob.begin(), c.accept_prob.end());
    out.restriction_ok.insert(out.restriction_ok.end(), c.restriction_ok.begin(),
                              c.restriction_ok.end());
    out.telemetry.insert(out.telemetry.end(), c.telemetry.begin(), c.telemetry.end());
  }
  return out;
}

}  // namespace dualres
