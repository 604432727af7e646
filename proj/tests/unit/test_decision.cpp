#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "dualres/decision.hpp"
#include "dualres/error.hpp"

using namespace dualres;

namespace {

PosteriorDraws make_draws(std::size_t g, std::size_t v, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> nd;
  PosteriorDraws d;
  d.n_voxels = v;
  d.mu.resize(g * v);
  for (std::size_t i = 0; i < g; ++i)
    for (std::size_t j = 0; j < v; ++j) d.mu[i * v + j] = 0.3 * static_cast<double>(j) + nd(rng);
  return d;
}

// Literal per-draw computation over the draw matrix.
std::vector<double> brute_f_bar(const PosteriorDraws& d) {
  const std::size_t G = d.n_draws(), V = d.n_voxels;
  std::vector<double> sd(V);
  for (std::size_t v = 0; v < V; ++v) {
    double m = 0.0;
    for (std::size_t g = 0; g < G; ++g) m += d.mu[g * V + v];
    m /= static_cast<double>(G);
    double s = 0.0;
    for (std::size_t g = 0; g < G; ++g) s += std::pow(d.mu[g * V + v] - m, 2);
    sd[v] = std::sqrt(s / static_cast<double>(G - 1));
  }
  std::vector<double> f(V, 0.0);
  for (std::size_t g = 0; g < G; ++g) {
    double mx = 0.0;
    for (std::size_t v = 0; v < V; ++v) mx = std::max(mx, std::abs(d.mu[g * V + v]) / sd[v]);
    for (std::size_t v = 0; v < V; ++v) f[v] += std::abs(d.mu[g * V + v]) / sd[v] / mx;
  }
  for (auto& x : f) x /= static_cast<double>(G);
  return f;
}

}  // namespace

TEST(DecisionParams, DefaultThresholdIsOneFifth) {
  DecisionParams p;
  EXPECT_DOUBLE_EQ(p.threshold(), 0.2);
  EXPECT_TRUE(p.check().empty());
}

TEST(DecisionParams, SevenFoldPenaltyRatio) {
  DecisionParams p{7.0, 1.0, 1.0};
  EXPECT_DOUBLE_EQ(p.threshold(), 0.3);
}

TEST(DecisionParams, InfiniteFalseNegativePenaltyReportsEverything) {
  double prev = 1.0;
  for (double k1 : {10.0, 1e3, 1e6, 1e12}) {
    DecisionParams p{k1, 1.0, 1.0};
    EXPECT_LT(p.threshold(), prev);
    prev = p.threshold();
  }
  EXPECT_LT(prev, 1e-11);
}

TEST(DecisionParams, OutOfRangeThresholdWarns) {
  DecisionParams p{0.0, 5.0, 5.0};  // 11 / 7
  EXPECT_GT(p.threshold(), 1.0);
  EXPECT_FALSE(p.check().empty());
  EXPECT_THROW((DecisionParams{-1.0, 1.0, 1.0}.threshold()), UsageError);
}

TEST(Decide, UsesGreaterOrEqual) {
  ActivationSummary s;
  s.f_bar = {0.1, 0.2, 0.25, 0.19999999};
  const auto d = decide(s, DecisionParams{});
  EXPECT_EQ(d.delta, (std::vector<std::uint8_t>{0, 1, 1, 0}));
  EXPECT_EQ(d.discoveries(), 2u);
  EXPECT_DOUBLE_EQ(d.threshold, 0.2);
}

TEST(Decide, ExhaustivelyMinimizesRisk) {
  Rng rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_real_distribution<double> k(0.0, 15.0);
  const std::size_t n = 12;
  for (int inst = 0; inst < 200; ++inst) {
    DecisionParams p{k(rng), k(rng), k(rng) / 3.0};
    ActivationSummary s;
    s.f_bar.resize(n);
    for (auto& f : s.f_bar) f = u(rng);
    const auto d = decide(s, p);
    const double best = risk(s.f_bar, d.delta, p);
    std::vector<std::uint8_t> delta(n);
    for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
      for (std::size_t i = 0; i < n; ++i) delta[i] = (mask >> i) & 1u;
      ASSERT_LE(best, risk(s.f_bar, delta, p) + 1e-12) << "instance " << inst << " mask " << mask;
    }
  }
}

TEST(Decide, MonotoneInFBar) {
  Rng rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ActivationSummary s;
  s.f_bar.resize(100);
  for (auto& f : s.f_bar) f = u(rng);
  const auto before = decide_at(s, 0.4);
  for (auto& f : s.f_bar) f = std::min(1.0, f + 0.5 * u(rng));
  const auto after = decide_at(s, 0.4);
  for (std::size_t i = 0; i < s.f_bar.size(); ++i)
    if (before.delta[i]) EXPECT_TRUE(after.delta[i]);
}

TEST(Risk, Examples) {
  const std::vector<double> ones(5, 1.0), zeros(5, 0.0);
  const std::vector<std::uint8_t> all(5, 1), none(5, 0);
  EXPECT_DOUBLE_EQ(risk(ones, all, DecisionParams{12.0, 0.0, 0.0}), -5.0);
  EXPECT_DOUBLE_EQ(risk(zeros, none, DecisionParams{}), -5.0);
  // One voxel, f = 0.5, report: -0.5 + k2*0.5 + t.
  const std::vector<double> half{0.5};
  EXPECT_DOUBLE_EQ(risk(half, std::vector<std::uint8_t>{1}, DecisionParams{12, 1, 1}), 1.0);
  EXPECT_DOUBLE_EQ(risk(half, std::vector<std::uint8_t>{0}, DecisionParams{12, 1, 1}), 5.5);
  EXPECT_THROW(risk(half, none, DecisionParams{}), UsageError);
}

TEST(ThresholdForCount, Extremes) {
  const std::vector<double> f{0.1, 0.7, 0.3, 0.9};
  const auto zero = threshold_for_count(f, 0);
  EXPECT_GT(zero.threshold, 0.9);
  EXPECT_EQ(zero.achieved, 0u);
  EXPECT_EQ(decide_at(ActivationSummary{{}, f, {}, 0, 0}, zero.threshold).discoveries(), 0u);
  const auto all = threshold_for_count(f, 4);
  EXPECT_EQ(all.threshold, 0.0);
  EXPECT_EQ(all.achieved, 4u);
  EXPECT_THROW(threshold_for_count(f, 5), UsageError);
}

TEST(ThresholdForCount, ExactWithDistinctValues) {
  Rng rng(9);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> f(1000);
  for (auto& x : f) x = u(rng);
  auto sorted = f;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  for (std::size_t n : {1u, 17u, 450u, 999u}) {
    const auto c = threshold_for_count(f, n);
    EXPECT_EQ(c.achieved, n);
    EXPECT_DOUBLE_EQ(c.threshold, sorted[n - 1]);
    ActivationSummary s;
    s.f_bar = f;
    EXPECT_EQ(decide_at(s, c.threshold).discoveries(), n);
  }
}

TEST(ThresholdForCount, TiesIncludeAllTiedVoxels) {
  const std::vector<double> f{0.9, 0.5, 0.5, 0.5, 0.1};
  const auto c = threshold_for_count(f, 2);
  EXPECT_DOUBLE_EQ(c.threshold, 0.5);
  EXPECT_EQ(c.achieved, 4u);
}

TEST(ThresholdForCount, MonotoneInCount) {
  Rng rng(10);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> f(200);
  for (auto& x : f) x = std::round(20.0 * u(rng)) / 20.0;  // many ties
  double prev = std::numeric_limits<double>::infinity();
  for (std::size_t n = 0; n <= f.size(); ++n) {
    const auto c = threshold_for_count(f, n);
    EXPECT_LE(c.threshold, prev);
    EXPECT_GE(c.achieved, n);
    prev = c.threshold;
  }
}

TEST(PosteriorM, SingleVaryingVoxel) {
  PosteriorDraws d;
  d.n_voxels = 3;
  d.mu = {1.0, 0.0, 0.0, 3.0, 0.0, 0.0, 2.0, 0.0, 0.0};
  const auto s = posterior_m(d);
  EXPECT_DOUBLE_EQ(s.f_bar[0], 1.0);
  EXPECT_EQ(s.f_bar[1], 0.0);
  EXPECT_EQ(s.f_bar[2], 0.0);
  EXPECT_EQ(s.zero_sd, 2u);
  EXPECT_DOUBLE_EQ(s.m[0], 2.0);  // mean 2, sd 1
}

TEST(PosteriorM, MatchesBruteForce) {
  const auto d = make_draws(300, 25, 7);
  const auto s = posterior_m(d);
  const auto ref = brute_f_bar(d);
  for (std::size_t v = 0; v < ref.size(); ++v) {
    EXPECT_NEAR(s.f_bar[v], ref[v], 1e-12);
    EXPECT_GE(s.f_bar[v], 0.0);
    EXPECT_LE(s.f_bar[v], 1.0);
  }
}

TEST(PosteriorM, ScaleInvariant) {
  auto d = make_draws(200, 10, 8);
  const auto a = posterior_m(d);
  for (auto& x : d.mu) x *= 37.5;
  const auto b = posterior_m(d);
  for (std::size_t v = 0; v < 10; ++v) {
    EXPECT_NEAR(a.f_bar[v], b.f_bar[v], 1e-12);
    EXPECT_NEAR(a.m[v], b.m[v], 1e-10);
  }
}

TEST(PosteriorM, PlugInReading) {
  const auto d = make_draws(200, 10, 9);
  const auto s = posterior_m(d, MStatistic::PlugIn);
  const double mx = *std::max_element(s.m.begin(), s.m.end());
  for (std::size_t v = 0; v < 10; ++v) EXPECT_DOUBLE_EQ(s.f_bar[v], s.m[v] / mx);
  EXPECT_DOUBLE_EQ(*std::max_element(s.f_bar.begin(), s.f_bar.end()), 1.0);
}

TEST(PosteriorM, NeedsTwoDraws) {
  PosteriorDraws d;
  d.n_voxels = 2;
  d.mu = {1.0, 2.0};
  EXPECT_THROW(posterior_m(d), UsageError);
}
