#include "dualres/methods.hpp"

#include <cmath>

#include "dualres/error.hpp"

namespace dualres {

Method parse_method(const std::string& name) {
  if (name == "dual") return Method::Dual;
  if (name == "high") return Method::High;
  if (name == "std") return Method::Std;
  if (name == "naive") return Method::Naive;
  throw UsageError("unknown method '" + name + "' (expected dual, high, std or naive)");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::Dual: return "dual";
    case Method::High: return "high";
    case Method::Std: return "std";
    case Method::Naive: return "naive";
  }
  return "?";
}

std::vector<double> naive_average(const std::vector<double>& y_h, const std::vector<double>& y_s,
                                  const KrigingWeights& w_hs) {
  const auto back = apply_Wt(w_hs, y_s);
  if (back.size() != y_h.size()) throw UsageError("W does not match Y_h");
  std::vector<double> out(y_h.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 0.5 * (y_h[i] + back[i]);
  return out;
}

PosteriorSummary summarize(const PosteriorDraws& pooled) {
  const auto G = pooled.n_draws();
  const auto V = pooled.n_voxels;
  PosteriorSummary s{std::vector<double>(V, 0.0), std::vector<double>(V, 0.0)};
  if (G == 0) throw UsageError("no posterior draws");
  for (std::size_t g = 0; g < G; ++g) {
    const auto row = pooled.draw(g);
    for (std::size_t v = 0; v < V; ++v) s.mean[v] += row[v];
  }
  for (auto& x : s.mean) x /= static_cast<double>(G);
  if (G < 2) return s;
  for (std::size_t g = 0; g < G; ++g) {
    const auto row = pooled.draw(g);
    for (std::size_t v = 0; v < V; ++v) s.sd[v] += (row[v] - s.mean[v]) * (row[v] - s.mean[v]);
  }
  for (auto& x : s.sd) x = std::sqrt(x / static_cast<double>(G - 1));
  return s;
}

namespace {

void require(const MaskedVolume* v, const char* what) {
  if (v == nullptr || v->count() == 0) throw UsageError(std::string("missing ") + what + " volume");
}

MethodFit run_on(Method method, const MaskedVolume& vol, ModelData data, const MethodInputs& in) {
  CirculantEmbedding emb(vol.grid(), in.theta, vol.masked_indices(), in.embedding);
  if (!emb.usable()) throw EmbeddingError("circulant embedding is not positive definite", emb.min_eig());
  MethodFit fit;
  fit.method = method;
  fit.extended_dims = emb.extended_dims();
  fit.min_eig = emb.min_eig();
  fit.notes = emb.notes();
  HmcConfig cfg = in.hmc;
  cfg.threads = in.threads;
  fit.chains = run_chains(data, emb, cfg);
  return fit;
}

}  // namespace

MethodFit fit_method(Method method, const MethodInputs& in) {
  KrigingOptions kopts{in.threads};
  switch (method) {
    case Method::High: {
      require(in.high, "high-resolution");
      ModelData d;
      d.y_h = in.high->masked_values();
      d.observed_h = in.observed_h;
      return run_on(method, *in.high, std::move(d), in);
    }
    case Method::Dual:
    case Method::Naive: {
      require(in.high, "high-resolution");
      require(in.standard, "standard-resolution");
      std::optional<KrigingWeights> own;
      const KrigingWeights* w = in.w_hs;
      if (w == nullptr) {
        own = build_W(*in.high, *in.standard, in.theta, in.radius, kopts);
        w = &*own;
      }
      ModelData d;
      d.observed_h = in.observed_h;
      if (method == Method::Dual) {
        d.y_h = in.high->masked_values();
        d.y_s = in.standard->masked_values();
        d.W = w;
      } else {
        d.y_h = naive_average(in.high->masked_values(), in.standard->masked_values(), *w);
      }
      return run_on(method, *in.high, std::move(d), in);
    }
    case Method::Std: {
      require(in.high, "high-resolution");
      require(in.standard, "standard-resolution");
      ModelData d;
      d.y_h = in.standard->masked_values();
      auto fit = run_on(method, *in.standard, std::move(d), in);
      std::optional<KrigingWeights> own;
      const KrigingWeights* w = in.w_sh;
      if (w == nullptr) {
        own = build_W(*in.standard, *in.high, in.theta, in.radius, kopts);
        w = &*own;
      }
      for (auto& c : fit.chains) {
        if (c.failed) continue;
        std::vector<double> mapped;
        mapped.reserve(c.n_draws() * w->rows);
        for (std::size_t g = 0; g < c.n_draws(); ++g) {
          const auto row = apply_W(*w, c.draw(g));
          mapped.insert(mapped.end(), row.begin(), row.end());
        }
        c.mu = std::move(mapped);
        c.n_voxels = w->rows;
        c.snapshots.clear();
      }
      return fit;
    }
  }
  throw UsageError("unknown method");
}

}  // namespace dualres
