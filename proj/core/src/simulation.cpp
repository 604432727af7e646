#include "dualres/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <mutex>
#include <optional>
#include <sstream>

#include "dualres/error.hpp"
#include "dualres/io.hpp"

namespace dualres {

KernelFamily parse_kernel_family(const std::string& name) {
  if (name == "exponential" || name == "exp") return KernelFamily::Exponential;
  if (name == "gaussian" || name == "gauss") return KernelFamily::Gaussian;
  throw UsageError("unknown kernel '" + name + "' (expected exponential or gaussian)");
}

std::string to_string(KernelFamily f) {
  return f == KernelFamily::Exponential ? "exponential" : "gaussian";
}

KernelParams SimDesign::background() const {
  return params_from_fwhm(background_fwhm, family_nu(family), background_var);
}

double SimDesign::radius() const { return correlation_radius(background(), radius_level); }

namespace {

Vec3 centre(const Grid3& g) {
  Vec3 c{};
  for (int a = 0; a < 3; ++a)
    c[a] = g.origin[a] + 0.5 * static_cast<double>(g.dims[a] - 1) * g.voxel_size[a];
  return c;
}

template <typename F>
std::vector<std::uint8_t> rasterize(const Grid3& g, F inside) {
  std::vector<std::uint8_t> m(g.size(), 0);
  const auto c = centre(g);
  for (std::size_t n = 0; n < g.size(); ++n) {
    const auto w = world_coords(g, g.unravel(n));
    m[n] = inside(w[0] - c[0], w[1] - c[1]) ? 1 : 0;
  }
  return m;
}

std::uint64_t stream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
  for (auto p : path) seed = split_seed(seed, p);
  return seed;
}

double mean_square(const std::vector<double>& x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

}  // namespace

std::vector<std::uint8_t> phantom_brain_mask(const SimDesign& d) {
  const auto& g = d.geometry;
  return rasterize(d.high_grid, [&](double x, double y) {
    const double u = x / g.semi_axis_x, v = y / g.semi_axis_y;
    const double lim = 1.0 + g.wave_amp * std::cos(g.wave_count * std::atan2(v, u));
    return u * u + v * v <= lim * lim;
  });
}

std::vector<std::uint8_t> phantom_shapes(const SimDesign& d) {
  const auto& g = d.geometry;
  auto m = rasterize(d.high_grid, [&](double x, double y) {
    const bool bar = std::abs(x - g.t_x) <= 0.5 * g.t_bar_w && std::abs(y - g.t_y) <= 0.5 * g.t_bar_h;
    const double stem_top = g.t_y - 0.5 * g.t_bar_h;
    const bool stem = std::abs(x - g.t_x) <= 0.5 * g.t_stem_w && y <= stem_top &&
                      y >= stem_top - g.t_stem_h;
    const double dx = x - g.disc_x, dy = y - g.disc_y;
    const bool disc = dx * dx + dy * dy <= g.disc_r * g.disc_r;
    return bar || stem || disc;
  });
  const auto& hg = d.high_grid;
  const auto c = centre(hg);
  const auto i0 = static_cast<std::int64_t>(std::floor((c[0] + g.square_x - hg.origin[0]) / hg.voxel_size[0]));
  const auto j0 = static_cast<std::int64_t>(std::floor((c[1] + g.square_y - hg.origin[1]) / hg.voxel_size[1]));
  for (std::int64_t j = j0; j < j0 + 2; ++j)
    for (std::int64_t i = i0; i < i0 + 2; ++i)
      if (hg.contains({i, j, 0})) m[hg.linear({i, j, 0})] = 1;
  return m;
}

std::vector<std::uint8_t> std_mask_from_high(const Grid3& high, const std::vector<std::uint8_t>& mask,
                                             const Grid3& std_grid) {
  if (mask.size() != high.size()) throw UsageError("mask does not match the high-resolution grid");
  std::vector<std::uint8_t> out(std_grid.size(), 0);
  for (std::size_t n = 0; n < high.size(); ++n) {
    if (!mask[n]) continue;
    const auto w = world_coords(high, high.unravel(n));
    Index3 idx{};
    for (int a = 0; a < 3; ++a)
      idx[a] = static_cast<std::int64_t>(
          std::floor((w[a] - std_grid.origin[a]) / std_grid.voxel_size[a] + 0.5));
    if (std_grid.contains(idx)) out[std_grid.linear(idx)] = 1;
  }
  return out;
}

std::vector<double> gaussian_smooth(const Grid3& grid, const std::vector<double>& image,
                                    double fwhm_mm) {
  if (image.size() != grid.size()) throw UsageError("image does not match grid");
  if (!(fwhm_mm > 0.0)) return image;
  const double sd_mm = fwhm_mm / (2.0 * std::sqrt(2.0 * std::log(2.0)));
  std::vector<double> cur = image, next(image.size());
  for (int a = 0; a < 3; ++a) {
    if (grid.dims[a] == 1) continue;
    const double sd = sd_mm / grid.voxel_size[a];
    const int half = static_cast<int>(std::ceil(4.0 * sd));
    std::vector<double> k(2 * half + 1);
    double ks = 0.0;
    for (int o = -half; o <= half; ++o) ks += k[o + half] = std::exp(-0.5 * (o / sd) * (o / sd));
    for (auto& v : k) v /= ks;
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t n = 0; n < grid.size(); ++n) {
      const auto idx = grid.unravel(n);
      double s = 0.0;
      for (int o = -half; o <= half; ++o) {
        auto j = idx;
        j[a] += o;
        if (j[a] < 0 || j[a] >= grid.dims[a]) continue;
        s += k[o + half] * cur[grid.linear(j)];
      }
      next[n] = s;
    }
    std::swap(cur, next);
  }
  return cur;
}

SimContext::SimContext(const SimDesign& design, int threads) : design_(design) {
  const auto hm = phantom_brain_mask(design_);
  high_ = MaskedVolume(design_.high_grid, hm, std::vector<double>(design_.high_grid.size(), 0.0));
  const auto sm = std_mask_from_high(design_.high_grid, hm, design_.std_grid);
  std_ = MaskedVolume(design_.std_grid, sm, std::vector<double>(design_.std_grid.size(), 0.0));

  const auto shapes = phantom_shapes(design_);
  std::vector<double> bin(shapes.begin(), shapes.end());
  const auto smooth = gaussian_smooth(design_.high_grid, bin, design_.activation_fwhm);
  for (auto n : high_.masked_indices()) {
    const double s = design_.activation_amp * smooth[n];
    const bool on = s >= design_.activation_threshold;
    signal_.push_back(on ? s : 0.0);
    active_.push_back(on ? 1 : 0);
  }

  const auto bg = design_.background();
  EmbeddingOptions eo;
  eo.allow_grow = true;
  eo.allow_clamp = true;
  emb_ = std::make_unique<CirculantEmbedding>(design_.high_grid, bg, high_.masked_indices(), eo);
  const double r = design_.radius();
  w_hs_ = build_W(high_, std_, bg, r, {threads});
  w_sh_ = build_W(std_, high_, bg, r, {threads});
}

std::size_t SimContext::active_count() const noexcept {
  return static_cast<std::size_t>(std::count(active_.begin(), active_.end(), 1));
}

Truth make_truth(const SimContext& ctx, Rng& rng, double amplitude_scale) {
  const auto u = sample_prior(ctx.embedding(), rng);
  Truth t;
  t.mu_h = restrict_real(ctx.embedding(), u);
  const auto& sig = ctx.signal();
  for (std::size_t i = 0; i < sig.size(); ++i) t.mu_h[i] += amplitude_scale * sig[i];
  if (amplitude_scale != 0.0)
    t.active = ctx.active();
  else
    t.active.assign(sig.size(), 0);
  return t;
}

SimData make_data(const Truth& truth, const KrigingWeights& w_hs, double snr_h, double ratio,
                  Rng& rng_h, Rng& rng_s) {
  if (!(snr_h > 0.0) || !(ratio > 0.0)) throw UsageError("SNR and ratio must be positive");
  SimData d;
  d.mu_s = apply_W(w_hs, truth.mu_h);
  d.sigma_h_sq = mean_square(truth.mu_h) / snr_h;
  d.sigma_s_sq = mean_square(d.mu_s) / (snr_h * ratio);
  std::normal_distribution<double> normal;
  const double sh = std::sqrt(d.sigma_h_sq), ss = std::sqrt(d.sigma_s_sq);
  d.y_h.resize(truth.mu_h.size());
  for (std::size_t i = 0; i < d.y_h.size(); ++i) d.y_h[i] = truth.mu_h[i] + sh * normal(rng_h);
  d.y_s.resize(d.mu_s.size());
  for (std::size_t i = 0; i < d.y_s.size(); ++i) d.y_s[i] = d.mu_s[i] + ss * normal(rng_s);
  return d;
}

SimResult score(const std::vector<double>& post_mean, const ActivationSummary& summary,
                const Truth& truth, std::size_t n_discoveries) {
  const auto V = truth.mu_h.size();
  if (post_mean.size() != V || summary.f_bar.size() != V || truth.active.size() != V)
    throw UsageError("score inputs have mismatched lengths");
  SimResult r;
  double se = 0.0;
  for (std::size_t i = 0; i < V; ++i) se += (post_mean[i] - truth.mu_h[i]) * (post_mean[i] - truth.mu_h[i]);
  r.mse = se / static_cast<double>(V);
  const auto ct = threshold_for_count(summary.f_bar, std::min(n_discoveries, V));
  std::size_t act = 0, inact = 0, fn = 0, fp = 0;
  for (std::size_t i = 0; i < V; ++i) {
    const bool d = summary.f_bar[i] >= ct.threshold;
    r.discoveries += d;
    if (truth.active[i]) {
      ++act;
      fn += !d;
    } else {
      ++inact;
      fp += d;
    }
  }
  r.false_neg_rate = act ? static_cast<double>(fn) / static_cast<double>(act) : 0.0;
  r.false_pos_rate = inact ? static_cast<double>(fp) / static_cast<double>(inact) : 0.0;
  return r;
}

SimResult score(const PosteriorDraws& pooled, const Truth& truth, std::size_t n_discoveries) {
  const auto s = summarize(pooled);
  return score(s.mean, posterior_m(pooled), truth, n_discoveries);
}

std::vector<double> roc_thresholds(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
  return t;
}

std::vector<RocPoint> roc(const std::vector<double>& f_bar, const std::vector<std::uint8_t>& active,
                          const std::vector<double>& thresholds) {
  if (f_bar.size() != active.size()) throw UsageError("ROC inputs have mismatched lengths");
  std::size_t act = 0;
  for (auto a : active) act += a != 0;
  const std::size_t inact = active.size() - act;
  std::vector<RocPoint> out;
  for (double th : thresholds) {
    std::size_t fn = 0, fp = 0;
    for (std::size_t i = 0; i < f_bar.size(); ++i) {
      const bool d = f_bar[i] >= th;
      if (active[i])
        fn += !d;
      else
        fp += d;
    }
    out.push_back({th, inact ? static_cast<double>(fp) / static_cast<double>(inact) : 0.0,
                   act ? static_cast<double>(fn) / static_cast<double>(act) : 0.0});
  }
  return out;
}

namespace {

struct Outcome {
  SimResult result;
  std::vector<RocPoint> roc;
  double accept = 0.0;
  double restriction = 0.0;
};

}  // namespace

SweepResult run_sweep(const SweepConfig& cfg) {
  if (cfg.replicates < 1) throw UsageError("replicates must be >= 1");
  cfg.hmc.validate();
  const std::size_t nf = cfg.families.size(), ns = cfg.snr_h.size(), nr = cfg.ratios.size(),
                    nm = cfg.methods.size();
  const std::size_t reps = static_cast<std::size_t>(cfg.replicates);
  const auto cell_of = [&](std::size_t f, std::size_t s, std::size_t r, std::size_t m) {
    return ((f * ns + s) * nr + r) * nm + m;
  };
  const std::size_t ncells = nf * ns * nr * nm;

  std::vector<std::unique_ptr<SimContext>> ctx;
  for (auto fam : cfg.families) {
    SimDesign d;
    d.family = fam;
    d.geometry = cfg.geometry;
    ctx.push_back(std::make_unique<SimContext>(d, cfg.threads));
  }

  std::vector<std::optional<Outcome>> outcomes(ncells * reps);
  SweepResult result;
  std::mutex log_mutex;
  const auto thresholds = roc_thresholds();

  parallel_for(reps, cfg.threads, [&](std::size_t b, std::size_t e, int) {
    for (std::size_t rep = b; rep < e; ++rep) {
      const std::uint64_t rs = split_seed(cfg.seed, rep);
      for (std::size_t f = 0; f < nf; ++f) {
        const auto& c = *ctx[f];
        Rng truth_rng = make_rng(stream(rs, {f}), 0);
        const Truth truth = make_truth(c, truth_rng);
        for (std::size_t s = 0; s < ns; ++s) {
          std::optional<Outcome> high_shared;
          for (std::size_t r = 0; r < nr; ++r) {
            Rng rng_h = make_rng(stream(rs, {f, s}), 1);
            Rng rng_s = make_rng(stream(rs, {f, s}), 2);
            const auto data = make_data(truth, c.w_hs(), cfg.snr_h[s], cfg.ratios[r], rng_h, rng_s);
            const auto yh = c.high_template().with_masked_values(data.y_h);
            const auto ys = c.std_template().with_masked_values(data.y_s);
            for (std::size_t m = 0; m < nm; ++m) {
              const Method method = cfg.methods[m];
              auto& slot = outcomes[cell_of(f, s, r, m) * reps + rep];
              if (method == Method::High && high_shared) {
                slot = high_shared;
                continue;
              }
              try {
                MethodInputs in;
                in.high = &yh;
                in.standard = &ys;
                in.theta = c.design().background();
                in.radius = c.design().radius();
                in.embedding.allow_grow = true;
                in.embedding.allow_clamp = true;
                in.hmc = cfg.hmc;
                in.hmc.seed = stream(rs, {f, s, method == Method::High ? 0 : r + 1,
                                          static_cast<std::uint64_t>(method), 3});
                in.threads = 1;
                in.w_hs = &c.w_hs();
                in.w_sh = &c.w_sh();
                const auto fit = fit_method(method, in);
                for (const auto& ch : fit.chains)
                  if (ch.failed) throw NumericalError("chain failed: " + ch.error);
                const auto pooled = pool_chains(fit.chains);
                const auto summ = summarize(pooled);
                const auto act = posterior_m(pooled);
                Outcome o;
                o.result = score(summ.mean, act, truth, cfg.n_discoveries);
                o.result.method = method;
                o.result.replicate = static_cast<int>(rep);
                o.roc = roc(act.f_bar, truth.active, thresholds);
                o.accept = pooled.post_warmup_accept();
                o.restriction = pooled.restriction_rate();
                slot = o;
                if (method == Method::High) high_shared = o;
              } catch (const std::exception& ex) {
                std::lock_guard lock(log_mutex);
                std::ostringstream os;
                os << "replicate " << rep << " " << to_string(method) << " "
                   << to_string(cfg.families[f]) << " snr_h=" << cfg.snr_h[s]
                   << " ratio=" << cfg.ratios[r] << " failed: " << ex.what();
                result.log.push_back(os.str());
              }
            }
          }
        }
      }
    }
  });

  for (std::size_t f = 0; f < nf; ++f)
    for (std::size_t s = 0; s < ns; ++s)
      for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t m = 0; m < nm; ++m) {
          CellSummary cs;
          cs.method = cfg.methods[m];
          cs.family = cfg.families[f];
          cs.snr_h = cfg.snr_h[s];
          cs.snr_ratio = cfg.ratios[r];
          cs.roc.assign(thresholds.size(), {});
          std::vector<double> mse, fn;
          double fp = 0.0, acc = 0.0, restr = 0.0;
          for (std::size_t rep = 0; rep < reps; ++rep) {
            const auto& o = outcomes[cell_of(f, s, r, m) * reps + rep];
            if (!o) {
              ++cs.failed;
              continue;
            }
            mse.push_back(o->result.mse);
            fn.push_back(o->result.false_neg_rate);
            fp += o->result.false_pos_rate;
            acc += o->accept;
            restr += std::isnan(o->restriction) ? 1.0 : o->restriction;
            for (std::size_t k = 0; k < thresholds.size(); ++k) {
              cs.roc[k].threshold = thresholds[k];
              cs.roc[k].false_pos += o->roc[k].false_pos;
              cs.roc[k].false_neg += o->roc[k].false_neg;
            }
          }
          cs.n = static_cast<int>(mse.size());
          auto mean_se = [](const std::vector<double>& x, double& mean, double& se) {
            const double n = static_cast<double>(x.size());
            mean = se = 0.0;
            if (x.empty()) return;
            for (double v : x) mean += v;
            mean /= n;
            if (x.size() < 2) return;
            double ss = 0.0;
            for (double v : x) ss += (v - mean) * (v - mean);
            se = std::sqrt(ss / (n - 1.0) / n);
          };
          mean_se(mse, cs.mse_mean, cs.mse_se);
          mean_se(fn, cs.false_neg_mean, cs.false_neg_se);
          if (cs.n > 0) {
            const double n = cs.n;
            cs.false_pos_mean = fp / n;
            cs.accept_mean = acc / n;
            cs.restriction_rate = restr / n;
            for (auto& p : cs.roc) {
              p.false_pos /= n;
              p.false_neg /= n;
            }
          }
          result.cells.push_back(std::move(cs));
        }
  std::sort(result.log.begin(), result.log.end());
  return result;
}

void write_sweep_csv(const SweepResult& r, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "model,kernel,snr_ratio,snr_h,mse,false_neg_mean,false_neg_se,mse_se,false_pos_mean,"
         "accept_mean,restriction_rate,replicates,failed\n";
  for (const auto& c : r.cells) {
    out << to_string(c.method) << ',' << to_string(c.family) << ',' << format_double(c.snr_ratio)
        << ',' << format_double(c.snr_h) << ',' << format_double(c.mse_mean) << ','
        << format_double(c.false_neg_mean) << ',' << format_double(c.false_neg_se) << ','
        << format_double(c.mse_se) << ',' << format_double(c.false_pos_mean) << ','
        << format_double(c.accept_mean) << ',' << format_double(c.restriction_rate) << ',' << c.n
        << ',' << c.failed << '\n';
  }
  if (!out) throw IoError("failed writing " + path);
}

void write_roc_csv(const std::vector<RocPoint>& roc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "threshold,false_pos,false_neg\n";
  for (const auto& p : roc)
    out << format_double(p.threshold) << ',' << format_double(p.false_pos) << ','
        << format_double(p.false_neg) << '\n';
  if (!out) throw IoError("failed writing " + path);
}

}  // namespace dualres
