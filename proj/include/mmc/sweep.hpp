#pragma once

#include <string>
#include <vector>

#include "mmc/analysis.hpp"
#include "mmc/simulation.hpp"

namespace mmc {

struct SweepCase {
    std::string label;
    Scenario scenario;
    std::vector<TimeWindow> windows;
};

struct SweepResult {
    std::string label;
    bool ok = false;
    std::string error;  ///< set when the run or a metric failed
    std::size_t samples = 0;
    double final_Vc1bar = 0.0;
    double final_Vc2bar = 0.0;
    std::vector<MetricReport> metrics;

    bool operator==(const SweepResult&) const = default;
};

/// Runs one case and evaluates its windows; errors are captured in the result.
SweepResult run_case(const SweepCase& c);

/// Reference implementation: cases one after another.
std::vector<SweepResult> run_sweep_serial(const std::vector<SweepCase>& cases);

/// Same results as run_sweep_serial, cases distributed over OpenMP threads
/// (threads <= 0 uses the OpenMP default).
std::vector<SweepResult> run_sweep_parallel(const std::vector<SweepCase>& cases, int threads = 0);

}  // namespace mmc
