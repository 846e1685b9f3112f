#include <benchmark/benchmark.h>

#include "shiftlab/haar.hpp"
#include "shiftlab/representation.hpp"
#include "shiftlab/shifts.hpp"
#include "shiftlab/weighted.hpp"

using namespace shiftlab;

namespace {

GridParams params1(int k_max) {
  GridParams p;
  p.dim = 1;
  p.k_min = 0;
  p.k_max = k_max;
  p.r = 4;
  p.gamma = {3, 8};
  return p;
}

void BM_HaarRoundTrip(benchmark::State& state) {
  auto p = params1(static_cast<int>(state.range(0)));
  auto sys = DyadicSystem::sample(p, 1);
  Window win = Window::full(p);
  auto f = random_function(1, p.k_max, win, 2);
  for (auto _ : state) {
    auto e = analyze(sys, f);
    auto back = synthesize(sys, e, win, p.k_max);
    benchmark::DoNotOptimize(back.values().data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_HaarRoundTrip)->DenseRange(6, 10, 2)->Complexity();

void BM_ShiftApply(benchmark::State& state) {
  auto p = params1(static_cast<int>(state.range(0)));
  auto sys = DyadicSystem::standard(p);
  Window win = Window::full(p);
  RandomShiftOptions opt;
  opt.u = 3;
  opt.v = 2;
  opt.records_per_block = 2;
  auto s = random_good_shift(sys, win, opt, 3);
  auto f = random_function(1, p.k_max, win, 4);
  for (auto _ : state) {
    auto out = apply_shift(*s, f);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ShiftApply)->DenseRange(6, 10, 2)->Complexity();

void BM_PiBadExhaustive(benchmark::State& state) {
  auto p = params1(static_cast<int>(state.range(0)));
  DyadicCube ref{p.k_max - 1, {0}};
  for (auto _ : state) {
    auto rep = estimate_pi_bad(p, ref, ProbabilityMode::exhaustive);
    benchmark::DoNotOptimize(rep.pi_bad_estimate);
  }
}
BENCHMARK(BM_PiBadExhaustive)->DenseRange(6, 12, 2);

void BM_GoodMds(benchmark::State& state) {
  auto p = params1(6);
  Window win = Window::full(p);
  auto table = goodness_table(p);
  OperatorMatrix m(1, p.k_max, win);
  for (std::int64_t i = 0; i < m.n(); ++i)
    for (std::int64_t j = 0; j < m.n(); ++j)
      m.at(i, j) = (i * 31 + j * 17) % 7 - 3.0;
  auto f = random_function(1, p.k_max, win, 5);
  auto g = random_function(1, p.k_max, win, 6);
  auto sys = DyadicSystem::sample(p, 7);
  for (auto _ : state) {
    double v = good_mds_value(m, f, g, sys, table);
    benchmark::DoNotOptimize(v);
  }
}
BENCHMARK(BM_GoodMds);

void BM_A2Scan(benchmark::State& state) {
  auto p = params1(static_cast<int>(state.range(0)));
  Window win = Window::full(p);
  auto sys = DyadicSystem::standard(p);
  Weight w = power_weight(p, win, 0.9, 0.0);
  for (auto _ : state) {
    double a2 = a2_characteristic(w, sys, CubeFamily::dyadic);
    benchmark::DoNotOptimize(a2);
  }
}
BENCHMARK(BM_A2Scan)->DenseRange(8, 12, 2);

}  // namespace

BENCHMARK_MAIN();
