#include "mmc/sweep.hpp"

#include <omp.h>

#include <exception>

namespace mmc {

SweepResult run_case(const SweepCase& c) {
    SweepResult result;
    result.label = c.label;
    try {
        const Trace trace = run_closed_loop(c.scenario);
        result.samples = trace.size();
        result.final_Vc1bar = trace.Vc1bar.back();
        result.final_Vc2bar = trace.Vc2bar.back();
        for (const auto& w : c.windows) {
            result.metrics.push_back(metric_report(trace, w, c.scenario.params.omega));
        }
        result.ok = true;
    } catch (const std::exception& e) {
        result.error = e.what();
    }
    return result;
}

std::vector<SweepResult> run_sweep_serial(const std::vector<SweepCase>& cases) {
    std::vector<SweepResult> results;
    results.reserve(cases.size());
    for (const auto& c : cases) results.push_back(run_case(c));
    return results;
}

std::vector<SweepResult> run_sweep_parallel(const std::vector<SweepCase>& cases, int threads) {
    std::vector<SweepResult> results(cases.size());
    const auto count = static_cast<long>(cases.size());
    if (threads <= 0) threads = omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (long i = 0; i < count; ++i) {
        results[static_cast<std::size_t>(i)] = run_case(cases[static_cast<std::size_t>(i)]);
    }
    return results;
}

}  // namespace mmc
