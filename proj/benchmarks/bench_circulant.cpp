#include <benchmark/benchmark.h>

#include <numeric>

#include "dualres/circulant.hpp"

using namespace dualres;

namespace {

CirculantEmbedding make_embedding(std::int64_t nx, std::int64_t ny, std::int64_t nz) {
  Grid3 g({nx, ny, nz}, {1.8, 1.8, 1.8});
  std::vector<std::size_t> brain(g.size());
  std::iota(brain.begin(), brain.end(), std::size_t{0});
  return CirculantEmbedding(g, params_from_fwhm(6.0, 1.0, 0.2), brain);
}

void BM_Embed(benchmark::State& state) {
  const auto n = state.range(0);
  Grid3 g({n, n, 1}, {1.8, 1.8, 1.8});
  std::vector<std::size_t> brain(g.size());
  std::iota(brain.begin(), brain.end(), std::size_t{0});
  for (auto _ : state) {
    CirculantEmbedding emb(g, params_from_fwhm(6.0, 1.0, 0.2), brain);
    benchmark::DoNotOptimize(emb.min_eig());
  }
}
BENCHMARK(BM_Embed)->Arg(32)->Arg(64)->Arg(128);

void BM_QuadForm(benchmark::State& state) {
  const auto n = state.range(0);
  const auto emb = make_embedding(n, n, 1);
  Rng rng = make_rng(1, 0);
  const auto u = sample_prior(emb, rng);
  for (auto _ : state) benchmark::DoNotOptimize(quad_form(emb, u));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(emb.size()));
}
BENCHMARK(BM_QuadForm)->Arg(32)->Arg(64)->Arg(128);

void BM_CinvMul(benchmark::State& state) {
  const auto n = state.range(0);
  const auto emb = make_embedding(n, n, 1);
  Rng rng = make_rng(1, 0);
  const auto u = sample_prior(emb, rng);
  for (auto _ : state) benchmark::DoNotOptimize(cinv_mul(emb, u));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(emb.size()));
}
BENCHMARK(BM_CinvMul)->Arg(32)->Arg(64)->Arg(128);

void BM_SamplePrior(benchmark::State& state) {
  const auto n = state.range(0);
  const auto emb = make_embedding(n, n, 1);
  Rng rng = make_rng(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(sample_prior(emb, rng));
}
BENCHMARK(BM_SamplePrior)->Arg(32)->Arg(64)->Arg(128);

void BM_CinvMul3D(benchmark::State& state) {
  const auto emb = make_embedding(40, 48, 40);
  Rng rng = make_rng(1, 0);
  const auto u = sample_prior(emb, rng);
  for (auto _ : state) benchmark::DoNotOptimize(cinv_mul(emb, u));
}
BENCHMARK(BM_CinvMul3D)->Unit(benchmark::kMillisecond);

}  // namespace
