#include <doctest.h>

#include "mmc/sweep.hpp"

using namespace mmc;

namespace {

std::vector<SweepCase> grid() {
    std::vector<SweepCase> cases;
    for (int i = 0; i < 6; ++i) {
        SweepCase c;
        c.label = "case" + std::to_string(i);
        c.scenario = Scenario::closed_loop_default();
        c.scenario.duration = 0.1;
        c.scenario.gains.Kd0 = 1e-4 * (1 + i % 3);
        if (i % 2) c.scenario.reference = {ReferenceMode::Constant};
        c.windows = {{0.06, 0.08}};
        cases.push_back(c);
    }
    // One broken case: window past the end of the run.
    SweepCase bad = cases.front();
    bad.label = "bad";
    bad.windows = {{0.2, 0.22}};
    cases.push_back(bad);
    return cases;
}

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("parallel sweep is bit-identical to the serial reference") {
    const auto cases = grid();
    const auto serial = run_sweep_serial(cases);
    REQUIRE(serial.size() == cases.size());
    for (int threads : {1, 2, 4}) {
        CHECK(run_sweep_parallel(cases, threads) == serial);
    }
    CHECK(run_sweep_parallel(cases) == serial);
}

TEST_CASE("failures are captured per case") {
    const auto results = run_sweep_serial(grid());
    for (std::size_t i = 0; i + 1 < results.size(); ++i) {
        CHECK(results[i].ok);
        CHECK(results[i].samples == 1001);
        CHECK(results[i].metrics.size() == 1);
    }
    CHECK_FALSE(results.back().ok);
    CHECK(results.back().error.find("past the trace") != std::string::npos);
}

}  // TEST_SUITE
