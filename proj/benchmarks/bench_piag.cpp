#include <benchmark/benchmark.h>

#include <random>

#include "piag/aggregation.hpp"
#include "piag/data.hpp"
#include "piag/diagnostics.hpp"
#include "piag/solver.hpp"

using namespace piag;

namespace {

Vector random_point(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> d;
  Vector x(n);
  for (double& v : x) v = d(gen);
  return x;
}

void BM_Prox(benchmark::State& state) {
  const auto kind = static_cast<RegularizerKind>(state.range(0));
  const Regularizer reg = kind == RegularizerKind::l1       ? Regularizer::l1(0.3)
                          : kind == RegularizerKind::l1_box ? Regularizer::l1_box(0.3, 1.0)
                          : kind == RegularizerKind::mcp    ? Regularizer::mcp(0.3, 3.0)
                                                            : Regularizer::zero();
  const auto z = random_point(static_cast<std::size_t>(state.range(1)), 1);
  Vector out(z.size());
  for (auto _ : state) {
    reg.prox(z, 0.5, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1));
  state.SetLabel(std::string(to_string(kind)));
}
BENCHMARK(BM_Prox)->ArgsProduct({{1, 2, 3}, {100, 10000}});

// One aggregation step per iteration on classification data with n features.
void BM_Aggregate(benchmark::State& state) {
  const auto scheme = static_cast<Scheme>(state.range(0));
  const auto p = make_synthetic(parse_synthetic_spec("classification:50,500,1"), Regularizer::l1(0.1));
  const auto x = random_point(p.dimension(), 2);
  AggregationConfig cfg;
  cfg.scheme = scheme;
  if (scheme == Scheme::lag) {
    cfg.lag.hard_cap = 8;
    cfg.tau_bound = 8;
  }
  AggregatedGradient agg(p, cfg, NoiseSchedule::none(), x);
  for (auto _ : state) benchmark::DoNotOptimize(agg.next(x).exact.data());
  state.SetLabel(std::string(to_string(scheme)));
}
BENCHMARK(BM_Aggregate)->Arg(static_cast<int>(Scheme::iag))->Arg(static_cast<int>(Scheme::svrg))
    ->Arg(static_cast<int>(Scheme::lag))->Arg(static_cast<int>(Scheme::prox_grad));

void BM_SolverRun(benchmark::State& state) {
  const auto p = make_synthetic(parse_synthetic_spec("lasso:50,100,1"), Regularizer::l1(0.1));
  SolverConfig cfg;
  cfg.budget = static_cast<std::size_t>(state.range(0));
  cfg.tol = 0.0;
  cfg.policy.mode = state.range(1) ? StepMode::line_search : StepMode::fixed_convex;
  for (auto _ : state) benchmark::DoNotOptimize(run(p, cfg).x.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
  state.SetLabel(state.range(1) ? "line_search" : "fixed");
}
BENCHMARK(BM_SolverRun)->Args({1000, 0})->Args({1000, 1})->Unit(benchmark::kMillisecond);

void BM_Evaluate(benchmark::State& state) {
  const auto p = make_synthetic(parse_synthetic_spec("lasso:50,100,1"), Regularizer::l1(0.1));
  SolverConfig cfg;
  cfg.budget = 5000;
  cfg.tol = 0.0;
  const auto r = run(p, cfg);
  const auto ref = reference_minimum(p);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(r, {.f_star = ref.f_star}).lyapunov.checked);
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
