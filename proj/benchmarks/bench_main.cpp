#include <benchmark/benchmark.h>

#include "gbpse/convergence.hpp"
#include "gbpse/corpus.hpp"
#include "gbpse/engine.hpp"
#include "gbpse/oracle.hpp"
#include "gbpse/scenario.hpp"

using namespace gbpse;

namespace {

GraphSpec noisy_ring(int n) {
    GeneratorParams gen;
    gen.x_true_scale = 1.0;
    return generate_scenario(corpus::ring(n), gen, 1).graph;
}

void BM_Step(benchmark::State& state) {
    const MeasurementGraph g(noisy_ring(static_cast<int>(state.range(0))));
    const auto threads = static_cast<unsigned>(state.range(1));
    MessageSet msgs = init_messages(g);
    for (auto _ : state) {
        auto st = step(g, msgs, threads);
        benchmark::DoNotOptimize(st.beliefs);
        msgs = std::move(st.messages);
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.slots().size()));
}
BENCHMARK(BM_Step)->Args({64, 1})->Args({1024, 1})->Args({1024, 4});

void BM_RunToConvergence(benchmark::State& state) {
    const MeasurementGraph g(noisy_ring(static_cast<int>(state.range(0))));
    RunOptions o;
    o.max_iters = 1000;
    o.tol = 1e-12;
    for (auto _ : state) benchmark::DoNotOptimize(run(g, o));
}
BENCHMARK(BM_RunToConvergence)->Arg(64)->Arg(512);

void BM_FixedPoint(benchmark::State& state) {
    const MeasurementGraph g(corpus::ring(static_cast<int>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(fixed_point(g));
}
BENCHMARK(BM_FixedPoint)->Arg(64)->Arg(512);

void BM_SolveMl(benchmark::State& state) {
    const MeasurementGraph g(noisy_ring(static_cast<int>(state.range(0))));
    OracleOptions o;
    o.full_covariance_cap = 0;
    for (auto _ : state) benchmark::DoNotOptimize(solve_ml(g, o));
}
BENCHMARK(BM_SolveMl)->Arg(64)->Arg(256);

void BM_AnalyzeStability(benchmark::State& state) {
    const MeasurementGraph g(corpus::dense7());
    for (auto _ : state) benchmark::DoNotOptimize(analyze_stability(g));
}
BENCHMARK(BM_AnalyzeStability);

}  // namespace

BENCHMARK_MAIN();
