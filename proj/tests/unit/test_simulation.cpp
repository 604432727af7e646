#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "dualres/diagnostics.hpp"
#include "dualres/error.hpp"
#include "dualres/methods.hpp"
#include "dualres/simulation.hpp"
#include "nifti_fixture.hpp"
#include "small_problem.hpp"

using namespace dualres;

namespace {

const SimContext& context() {
  static const SimContext ctx(SimDesign{}, 4);
  return ctx;
}

double within(double value, double target, double rel) {
  return std::abs(value - target) <= rel * target;
}

oracle::SmallProblemSpec stable_spec() {
  oracle::SmallProblemSpec s;
  s.high_dims = {8, 8, 1};
  s.std_dims = {4, 4, 1};
  s.theta = params_from_fwhm(6.0, 1.0, 1.0);
  s.radius = 6.0;
  s.sigma_h_sq = 1.0;
  s.sigma_s_sq = 0.5;
  return s;
}

MethodInputs inputs_for(const oracle::SmallProblem& p, const MaskedVolume& yh, const MaskedVolume& ys,
                        int iterations) {
  MethodInputs in;
  in.high = &yh;
  in.standard = &ys;
  in.theta = p.theta;
  in.radius = 6.0;
  in.hmc.chains = 3;
  in.hmc.warmup = 1000;
  in.hmc.iterations = iterations;
  in.hmc.thin = 2;
  in.hmc.L = 10;
  in.hmc.seed = 5;
  in.threads = 3;
  return in;
}

}  // namespace

TEST(SimDesign, PhantomCounts) {
  const auto& ctx = context();
  EXPECT_TRUE(within(static_cast<double>(ctx.high_template().count()), 4722.0, 0.05))
      << ctx.high_template().count();
  EXPECT_TRUE(within(static_cast<double>(ctx.std_template().count()), 1853.0, 0.05))
      << ctx.std_template().count();
  EXPECT_TRUE(within(static_cast<double>(ctx.active_count()), 450.0, 0.05)) << ctx.active_count();
  EXPECT_EQ(ctx.signal().size(), ctx.high_template().count());
  EXPECT_EQ(ctx.w_hs().rows, ctx.std_template().count());
  EXPECT_EQ(ctx.w_hs().cols, ctx.high_template().count());
  EXPECT_EQ(ctx.w_sh().rows, ctx.high_template().count());
}

TEST(SimDesign, ActiveVoxelsCarryThresholdedSignal) {
  const auto& ctx = context();
  const double th = ctx.design().activation_threshold;
  for (std::size_t i = 0; i < ctx.signal().size(); ++i) {
    if (ctx.active()[i]) {
      EXPECT_GE(ctx.signal()[i], th);
      EXPECT_LE(ctx.signal()[i], ctx.design().activation_amp);
    } else {
      EXPECT_EQ(ctx.signal()[i], 0.0);
    }
  }
}

TEST(SimDesign, RadiusAndKernel) {
  SimDesign d;
  EXPECT_NEAR(fwhm(d.background()), 6.0, 1e-12);
  EXPECT_NEAR(d.background().tau_sq, 0.2, 1e-15);
  EXPECT_NEAR(d.radius(), 12.9658, 1e-3);
  d.family = KernelFamily::Gaussian;
  EXPECT_EQ(d.background().nu, 2.0);
  EXPECT_EQ(parse_kernel_family("gaussian"), KernelFamily::Gaussian);
  EXPECT_EQ(to_string(KernelFamily::Exponential), "exponential");
  EXPECT_THROW(parse_kernel_family("matern"), UsageError);
}

TEST(SimDesign, StdMaskUsesCentreContainment) {
  const Grid3 hg({6, 1, 1}, {1.0, 1.0, 1.0});
  const Grid3 sg({3, 1, 1}, {2.0, 2.0, 2.0}, {0.5, 0.0, 0.0});
  // High centres 0..5 fall in std cells round((x - 0.5)/2): 0,0,1,1,2,2.
  const std::vector<std::uint8_t> m{0, 0, 1, 0, 0, 0};
  EXPECT_EQ(std_mask_from_high(hg, m, sg), (std::vector<std::uint8_t>{0, 1, 0}));
}

TEST(SimDesign, GaussianSmoothPreservesMassInInterior) {
  const Grid3 g({41, 41, 1}, {1.0, 1.0, 1.0});
  std::vector<double> img(g.size(), 0.0);
  img[g.linear({20, 20, 0})] = 1.0;
  const auto s = gaussian_smooth(g, img, 6.0);
  double total = 0.0;
  for (double v : s) total += v;
  EXPECT_NEAR(total, 1.0, 1e-12);
  // Half maximum at 3 mm from the centre along an axis.
  const double peak = s[g.linear({20, 20, 0})];
  const double at3 = s[g.linear({23, 20, 0})];
  EXPECT_NEAR(at3 / peak, 0.5, 0.02);
}

TEST(MakeTruth, ZeroAmplitudeIsPureBackground) {
  const auto& ctx = context();
  Rng a(3), b(3);
  const auto t0 = make_truth(ctx, a, 0.0);
  const auto t1 = make_truth(ctx, b, 1.0);
  EXPECT_EQ(std::count(t0.active.begin(), t0.active.end(), 1), 0);
  EXPECT_EQ(static_cast<std::size_t>(std::count(t1.active.begin(), t1.active.end(), 1)), ctx.active_count());
  for (std::size_t i = 0; i < t0.mu_h.size(); ++i)
    EXPECT_DOUBLE_EQ(t1.mu_h[i] - t0.mu_h[i], ctx.signal()[i]);
}

TEST(MakeTruth, Reproducible) {
  const auto& ctx = context();
  Rng a(11), b(11);
  EXPECT_EQ(make_truth(ctx, a).mu_h, make_truth(ctx, b).mu_h);
}

TEST(MakeTruth, BackgroundVarianceAndCovariance) {
  const auto& ctx = context();
  const auto& vol = ctx.high_template();
  const auto& g = vol.grid();
  const auto ord = vol.ordinals();
  const std::vector<std::int64_t> lags{0, 1, 2, 3, 5};
  const int reps = 200;
  std::vector<std::vector<double>> per_rep(lags.size(), std::vector<double>(reps));
  for (int r = 0; r < reps; ++r) {
    Rng rng = make_rng(77, static_cast<std::uint64_t>(r));
    const auto t = make_truth(ctx, rng, 0.0);
    for (std::size_t l = 0; l < lags.size(); ++l) {
      double s = 0.0;
      std::size_t n = 0;
      for (auto lin : vol.masked_indices()) {
        auto idx = g.unravel(lin);
        idx[0] += lags[l];
        if (!g.contains(idx) || !vol.in_mask(g.linear(idx))) continue;
        s += t.mu_h[static_cast<std::size_t>(ord[lin])] * t.mu_h[static_cast<std::size_t>(ord[g.linear(idx)])];
        ++n;
      }
      per_rep[l][r] = s / static_cast<double>(n);
    }
  }
  const auto k = SimDesign{}.background();
  for (std::size_t l = 0; l < lags.size(); ++l) {
    double m = 0.0, v = 0.0;
    for (double x : per_rep[l]) m += x;
    m /= reps;
    for (double x : per_rep[l]) v += (x - m) * (x - m);
    const double se = std::sqrt(v / (reps - 1) / reps);
    const double expected = k(1.8 * static_cast<double>(lags[l]));
    EXPECT_NEAR(m, expected, 4.0 * se) << "lag " << lags[l];
    if (lags[l] == 0) EXPECT_NEAR(m, 0.2, 0.02);
  }
}

TEST(MakeData, SnrArithmetic) {
  Truth t;
  t.mu_h = {1.0, -1.0, 0.0, 0.0};  // mean square 0.5
  t.active.assign(4, 0);
  const auto w = KrigingWeights::identity(4);
  Rng a(1), b(2);
  const auto d = make_data(t, w, 0.1, 2.0, a, b);
  EXPECT_DOUBLE_EQ(d.sigma_h_sq, 5.0);
  EXPECT_DOUBLE_EQ(d.sigma_s_sq, 2.5);
  EXPECT_EQ(d.mu_s, t.mu_h);
  EXPECT_THROW(make_data(t, w, 0.0, 1.0, a, b), UsageError);
}

TEST(MakeData, HighNoiseIndependentOfRatio) {
  const auto& ctx = context();
  Rng rt(4);
  const auto t = make_truth(ctx, rt);
  Rng h1(8), s1(9), h2(8), s2(9);
  const auto a = make_data(t, ctx.w_hs(), 0.1, 1.0, h1, s1);
  const auto b = make_data(t, ctx.w_hs(), 0.1, 2.0, h2, s2);
  EXPECT_EQ(a.y_h, b.y_h);
  EXPECT_NEAR(a.sigma_s_sq, 2.0 * b.sigma_s_sq, 1e-12 * a.sigma_s_sq);
}

TEST(MakeData, EmpiricalSnrNearNominal) {
  const auto& ctx = context();
  double snr = 0.0;
  const int reps = 100;
  for (int r = 0; r < reps; ++r) {
    Rng rt = make_rng(91, static_cast<std::uint64_t>(r));
    Rng rh = make_rng(92, static_cast<std::uint64_t>(r));
    Rng rs = make_rng(93, static_cast<std::uint64_t>(r));
    const auto t = make_truth(ctx, rt);
    const auto d = make_data(t, ctx.w_hs(), 0.1, 2.0, rh, rs);
    double sig = 0.0, noise = 0.0;
    for (std::size_t i = 0; i < t.mu_h.size(); ++i) {
      sig += t.mu_h[i] * t.mu_h[i];
      noise += std::pow(d.y_h[i] - t.mu_h[i], 2);
    }
    snr += sig / noise;
  }
  EXPECT_NEAR(snr / reps, 0.1, 0.005);
}

TEST(Methods, ParseNames) {
  for (auto m : {Method::Dual, Method::High, Method::Std, Method::Naive})
    EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_THROW(parse_method("bogus"), UsageError);
}

TEST(Methods, NaiveAverageIsExact) {
  auto p = oracle::make_small_problem();
  const auto out = naive_average(p->data.y_h, p->data.y_s, p->W);
  const Eigen::VectorXd ref = 0.5 * (p->y_h + p->Wd.transpose() * p->y_s);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], ref(static_cast<Eigen::Index>(i)), 1e-14);
}

TEST(Methods, NaiveFitsTheAveragedImage) {
  auto p = oracle::make_small_problem(stable_spec());
  const auto yh = p->high.with_masked_values(p->data.y_h);
  const auto ys = p->standard.with_masked_values(p->data.y_s);
  auto in = inputs_for(*p, yh, ys, 200);
  const auto naive = fit_method(Method::Naive, in);
  const auto avg = yh.with_masked_values(naive_average(p->data.y_h, p->data.y_s, p->W));
  in.high = &avg;
  const auto high = fit_method(Method::High, in);
  ASSERT_EQ(naive.chains.size(), high.chains.size());
  for (std::size_t c = 0; c < naive.chains.size(); ++c) EXPECT_EQ(naive.chains[c].mu, high.chains[c].mu);
}

TEST(Methods, DeterministicAcrossThreadCounts) {
  auto p = oracle::make_small_problem(stable_spec());
  const auto yh = p->high.with_masked_values(p->data.y_h);
  const auto ys = p->standard.with_masked_values(p->data.y_s);
  auto in = inputs_for(*p, yh, ys, 200);
  const auto a = fit_method(Method::Dual, in);
  in.threads = 1;
  const auto b = fit_method(Method::Dual, in);
  for (std::size_t c = 0; c < a.chains.size(); ++c) {
    EXPECT_EQ(a.chains[c].mu, b.chains[c].mu);
    EXPECT_EQ(a.chains[c].sigma_h_sq, b.chains[c].sigma_h_sq);
  }
  EXPECT_EQ(a.extended_dims, (std::array<std::int64_t, 3>{16, 16, 1}));
}

TEST(Methods, StdDrawsAreKrigedToHighGrid) {
  auto p = oracle::make_small_problem(stable_spec());
  const auto yh = p->high.with_masked_values(p->data.y_h);
  const auto ys = p->standard.with_masked_values(p->data.y_s);
  auto in = inputs_for(*p, yh, ys, 100);
  const auto fit = fit_method(Method::Std, in);
  for (const auto& c : fit.chains) {
    ASSERT_FALSE(c.failed) << c.error;
    EXPECT_EQ(c.n_voxels, yh.count());
    EXPECT_EQ(c.n_draws(), 50u);
  }
}

TEST(Methods, MissingInputsAreUsageErrors) {
  auto p = oracle::make_small_problem(stable_spec());
  const auto yh = p->high.with_masked_values(p->data.y_h);
  MethodInputs in = inputs_for(*p, yh, yh, 10);
  in.standard = nullptr;
  EXPECT_THROW(fit_method(Method::Dual, in), UsageError);
  in.high = nullptr;
  EXPECT_THROW(fit_method(Method::High, in), UsageError);
}

TEST(Methods, DualApproachesHighWhenStdIsUninformative) {
  auto spec = stable_spec();
  spec.sigma_s_sq = 1e6;  // ratio ~ 1e-6
  auto p = oracle::make_small_problem(spec);
  const auto yh = p->high.with_masked_values(p->data.y_h);
  const auto ys = p->standard.with_masked_values(p->data.y_s);
  auto in = inputs_for(*p, yh, ys, 8000);
  const auto dual = fit_method(Method::Dual, in);
  const auto high = fit_method(Method::High, in);
  const auto sd = summarize(pool_chains(dual.chains));
  const auto sh = summarize(pool_chains(high.chains));
  const auto ed = ess_all(dual.chains), eh = ess_all(high.chains);
  double worst = 0.0;
  for (std::size_t v = 0; v < sd.mean.size(); ++v) {
    const double se = std::sqrt(sd.sd[v] * sd.sd[v] / ed[v] + sh.sd[v] * sh.sd[v] / eh[v]);
    worst = std::max(worst, std::abs(sd.mean[v] - sh.mean[v]) / se);
  }
  EXPECT_LE(worst, 3.0);
}

TEST(Score, PerfectPosterior) {
  const auto& ctx = context();
  Rng rng(5);
  const auto t = make_truth(ctx, rng);
  ActivationSummary s;
  s.f_bar.assign(t.active.begin(), t.active.end());
  const auto r = score(t.mu_h, s, t, ctx.active_count());
  EXPECT_EQ(r.mse, 0.0);
  EXPECT_EQ(r.false_neg_rate, 0.0);
  EXPECT_EQ(r.false_pos_rate, 0.0);
  EXPECT_EQ(r.discoveries, ctx.active_count());
}

TEST(Score, HandComputedCase) {
  Truth t;
  t.mu_h = {1.0, 2.0, 0.0, 0.0};
  t.active = {1, 1, 0, 0};
  ActivationSummary s;
  s.f_bar = {0.9, 0.1, 0.5, 0.2};
  const auto r = score({1.5, 2.0, -1.0, 0.0}, s, t, 2);
  EXPECT_DOUBLE_EQ(r.mse, (0.25 + 1.0) / 4.0);
  EXPECT_DOUBLE_EQ(r.false_neg_rate, 0.5);
  EXPECT_DOUBLE_EQ(r.false_pos_rate, 0.5);
  EXPECT_EQ(r.discoveries, 2u);
}

TEST(Score, FromDraws) {
  Truth t;
  t.mu_h = {0.0, 0.0, 0.0};
  t.active = {1, 0, 0};
  PosteriorDraws d;
  d.n_voxels = 3;
  d.mu = {4.0, 1.0, -1.0, 6.0, -1.0, 1.0};
  const auto r = score(d, t, 1);
  EXPECT_DOUBLE_EQ(r.mse, 25.0 / 3.0);
  EXPECT_EQ(r.false_neg_rate, 0.0);
  EXPECT_EQ(r.discoveries, 1u);
}

TEST(Roc, MonotoneTradeoff) {
  Rng rng(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> f(500);
  std::vector<std::uint8_t> act(500);
  for (std::size_t i = 0; i < f.size(); ++i) {
    act[i] = u(rng) < 0.1;
    f[i] = std::min(1.0, u(rng) * (act[i] ? 1.5 : 0.8));
  }
  const auto pts = roc(f, act, roc_thresholds());
  ASSERT_EQ(pts.size(), 101u);
  EXPECT_EQ(pts.front().false_neg, 0.0);
  EXPECT_EQ(pts.front().false_pos, 1.0);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    EXPECT_GE(pts[i].false_neg, pts[i - 1].false_neg);
    EXPECT_LE(pts[i].false_pos, pts[i - 1].false_pos);
  }
}

TEST(Sweep, TinySweepProducesAllCellsAndCsv) {
  SweepConfig cfg;
  cfg.replicates = 1;
  cfg.ratios = {2.0};
  cfg.methods = {Method::Dual, Method::Naive};
  cfg.hmc.chains = 1;
  cfg.hmc.warmup = 20;
  cfg.hmc.iterations = 20;
  cfg.hmc.thin = 1;
  cfg.hmc.L = 5;
  cfg.threads = 4;
  const auto res = run_sweep(cfg);
  ASSERT_EQ(res.cells.size(), 2u);
  for (const auto& c : res.cells) {
    EXPECT_EQ(c.n + c.failed, 1);
    EXPECT_GE(c.false_neg_mean, 0.0);
    EXPECT_LE(c.false_neg_mean, 1.0);
  }
  const auto path = fixture::temp_path("sweep.csv");
  write_sweep_csv(res, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header.rfind("model,kernel,snr_ratio,snr_h,mse,false_neg_mean,false_neg_se", 0), 0u);
  int rows = 0;
  for (std::string line; std::getline(in, line);) rows += !line.empty();
  EXPECT_EQ(rows, 2);
}
