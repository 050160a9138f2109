#include <benchmark/benchmark.h>

#include "symfit/constraints.hpp"
#include "symfit/simulate.hpp"
#include "symfit/solver.hpp"

using namespace symfit;

namespace {

Table dysmenorrhea() {
    return Table(3, 3, {6, 4, 5, 3, 13, 10, 1, 8, 14, 2, 3, 2, 1, 3, 1, 2, 1, 2, 1, 0, 2, 0, 0, 0, 1, 1, 0});
}

const char* const kTags[] = {"s", "poqs", "oqs", "mh", "me", "ml", "qs"};

void BM_Fit(benchmark::State& state) {
    Table t = dysmenorrhea();
    auto cs = build_model(kTags[state.range(0)], 3, 3, ScoreVector::equal_interval(3));
    for (auto _ : state) benchmark::DoNotOptimize(fit(t, cs).g_squared);
    state.SetLabel(kTags[state.range(0)]);
}
BENCHMARK(BM_Fit)->DenseRange(0, 6)->Unit(benchmark::kMicrosecond);

void BM_FitLoglinear(benchmark::State& state) {
    Table t = dysmenorrhea();
    auto u = ScoreVector::equal_interval(3);
    for (auto _ : state) benchmark::DoNotOptimize(fit_loglinear_kl(t, LoglinearModel::oqs, u).g_squared);
}
BENCHMARK(BM_FitLoglinear)->Unit(benchmark::kMicrosecond);

void BM_Orthocomplement(benchmark::State& state) {
    const int r = static_cast<int>(state.range(0));
    const int T = static_cast<int>(state.range(1));
    DesignMatrix X = build_design(r, T, ScoreVector::equal_interval(r));
    for (auto _ : state) benchmark::DoNotOptimize(orthocomplement(X).U.data());
}
BENCHMARK(BM_Orthocomplement)->Args({3, 3})->Args({4, 3})->Args({3, 4})->Args({5, 4})->Unit(benchmark::kMicrosecond);

void BM_AdditivityReplicate(benchmark::State& state) {
    Table t = dysmenorrhea();
    SimConfig cfg{symmetrize(t.proportions())};
    cfg.sample_size = state.range(0);
    cfg.replications = 1;
    cfg.threads = 1;
    std::uint64_t seed = 1;
    for (auto _ : state) {
        cfg.seed = seed++;
        benchmark::DoNotOptimize(run_additivity_study(cfg).mean_abs_residual);
    }
}
BENCHMARK(BM_AdditivityReplicate)->Arg(200)->Arg(20000)->Unit(benchmark::kMicrosecond);

}  // namespace
BENCHMARK_MAIN();
