#include <benchmark/benchmark.h>

#include "mmc/sweep.hpp"

namespace {

std::vector<mmc::SweepCase> make_cases(int count) {
    std::vector<mmc::SweepCase> cases;
    for (int i = 0; i < count; ++i) {
        auto s = mmc::Scenario::closed_loop_default();
        s.duration = 0.5;
        s.gains.Kd0 = 1e-4 * (1.0 + 0.25 * i);
        if (i % 2) s.reference.mode = mmc::ReferenceMode::Constant;
        cases.push_back({"case" + std::to_string(i), s, {{0.38, 0.40}}});
    }
    return cases;
}

void BM_SweepSerial(benchmark::State& state) {
    const auto cases = make_cases(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(mmc::run_sweep_serial(cases));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SweepParallel(benchmark::State& state) {
    const auto cases = make_cases(static_cast<int>(state.range(0)));
    for (auto _ : state) {
        benchmark::DoNotOptimize(mmc::run_sweep_parallel(cases));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_SweepSerial)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_SweepParallel)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
