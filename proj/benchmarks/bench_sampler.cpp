#include <benchmark/benchmark.h>

#include "dualres/hmc.hpp"
#include "dualres/kriging.hpp"
#include "dualres/simulation.hpp"

using namespace dualres;

namespace {

struct Problem {
  SimContext ctx{SimDesign{}};
  SimData data;
  ModelData model;
  ModelState state;

  explicit Problem(bool dual) {
    Rng t = make_rng(3, 0), h = make_rng(3, 1), s = make_rng(3, 2);
    const auto truth = make_truth(ctx, t);
    data = make_data(truth, ctx.w_hs(), 0.1, 2.0, h, s);
    model.y_h = data.y_h;
    if (dual) {
      model.y_s = data.y_s;
      model.W = &ctx.w_hs();
    }
    state = initial_state(model, ctx.embedding());
  }
};

void BM_HmcUpdate(benchmark::State& state) {
  Problem p(state.range(0) != 0);
  Rng rng = make_rng(5, 0);
  for (auto _ : state) {
    auto step = hmc_update(p.state, p.model, p.ctx.embedding(), 0.05, 25, rng);
    benchmark::DoNotOptimize(step.accept_prob);
  }
}
BENCHMARK(BM_HmcUpdate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_ApplyW(benchmark::State& state) {
  Problem p(true);
  for (auto _ : state) {
    auto y = apply_W(p.ctx.w_hs(), p.data.y_h);
    benchmark::DoNotOptimize(apply_Wt(p.ctx.w_hs(), y));
  }
}
BENCHMARK(BM_ApplyW)->Unit(benchmark::kMicrosecond);

void BM_BuildW(benchmark::State& state) {
  const SimDesign d;
  SimContext ctx(d);
  for (auto _ : state) {
    auto w = build_W(ctx.high_template(), ctx.std_template(), d.background(), d.radius());
    benchmark::DoNotOptimize(w.nnz());
  }
}
BENCHMARK(BM_BuildW)->Unit(benchmark::kMillisecond);

}  // namespace
