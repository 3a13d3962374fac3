#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "mmc/errors.hpp"
#include "mmc/scenario_io.hpp"

using namespace mmc;

namespace {

ScenarioFile parse(const std::string& text) {
    std::istringstream in(text);
    return parse_scenario(in, "test.ini");
}

template <class T>
bool same_bits(const std::vector<T>& a, const std::vector<T>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if constexpr (std::is_floating_point_v<T>) {
            if (std::isnan(a[i]) && std::isnan(b[i])) continue;
        }
        if (a[i] != b[i]) return false;
    }
    return true;
}

}  // namespace

TEST_SUITE("scenario-io") {

TEST_CASE("empty file gives the default scenario") {
    auto f = parse("");
    auto s = f.resolved();
    CHECK(s.params.n == 8);
    CHECK(s.initial.vc.size() == 16);
    CHECK(s.initial.vc[0] == 31.25);
    CHECK(s.duration == 3.5);
    CHECK(s.schedule.steps.size() == 3);
    CHECK(f.windows == default_windows());
}

TEST_CASE("keys are parsed") {
    auto f = parse(
        "# comment\n"
        "[params]\n"
        "n = 3\n"
        "Vdc = 250 ; inline comment\n"
        "frequency_hz = 60\n"
        "[gains]\n"
        "KdM = 2e-3\n"
        "wn = 2\n"
        "[schedule]\n"
        "steps = 0:1.0, 0.5:2.0\n"
        "[run]\n"
        "duration = 0.8\n"
        "reference = constant:40\n"
        "integrator = euler\n"
        "initial_vc = 110\n"
        "windows = 0.1:0.2\n");
    auto s = f.resolved();
    CHECK(s.params.n == 3);
    CHECK(s.params.omega == doctest::Approx(2.0 * std::numbers::pi * 60.0));
    CHECK(s.schedule.omega == s.params.omega);
    CHECK(s.gains.KdM == 2e-3);
    CHECK(s.gains.wn == 2);
    CHECK(s.schedule.steps[1].start == 0.5);
    CHECK(s.schedule.steps[1].amplitude == 2.0);
    CHECK(s.duration == 0.8);
    CHECK(s.reference.mode == ReferenceMode::Constant);
    CHECK(s.reference.value == 40.0);
    CHECK(s.integrator == IntegrationMethod::EulerTs);
    CHECK(s.initial.vc == std::vector<double>(6, 110.0));
    REQUIRE(f.windows.size() == 1);
    CHECK(f.windows[0] == TimeWindow{0.1, 0.2});
}

TEST_CASE("errors name the culprit") {
    CHECK_THROWS_WITH_AS(parse("[params]\nLx = 0.01\n"), doctest::Contains("params.Lx"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse("[bogus]\na = 1\n"), doctest::Contains("[bogus]"), ConfigError);
    CHECK_THROWS_WITH_AS(parse("[params]\nL = ten\n"), doctest::Contains("params.L"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse("[params]\nL = 1\nL = 2\n"), doctest::Contains("test.ini"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse("[run]\nintegrator = midpoint\n"),
                         doctest::Contains("run.integrator"), ConfigError);
    CHECK_THROWS_WITH_AS(parse("[params]\nL = -1\n").resolved(), doctest::Contains("params.L"),
                         ConfigError);
    CHECK_THROWS_WITH_AS(parse("[run]\ninitial_vc = 1, 2, 3\n").resolved(),
                         doctest::Contains("run.initial_vc"), ConfigError);
    CHECK_THROWS_WITH_AS(load_scenario("/nonexistent/x.ini"),
                         doctest::Contains("cannot open scenario file"), ConfigError);
}

TEST_CASE("overrides") {
    ScenarioFile f;
    apply_override(f, "params.Ts", "2e-4");
    apply_override(f, "run.seed", "12");
    CHECK(f.scenario.params.Ts == 2e-4);
    CHECK(f.scenario.seed == 12);
    CHECK_THROWS_WITH_AS(apply_override(f, "params.nope", "1"),
                         doctest::Contains("unknown scenario key 'params.nope'"), ConfigError);
    CHECK_THROWS_AS(apply_override(f, "Ts", "1"), ConfigError);
}

TEST_CASE("reference settings") {
    CHECK(parse_reference("optimal").mode == ReferenceMode::Optimal);
    auto c = parse_reference("constant");
    CHECK(c.mode == ReferenceMode::Constant);
    CHECK(std::isnan(c.value));
    CHECK(parse_reference("constant:38.5").value == 38.5);
    CHECK(format_reference(parse_reference("constant:38.5")) == "constant:38.5");
    CHECK(format_reference(parse_reference("optimal")) == "optimal");
    CHECK_THROWS_AS(parse_reference("fixed"), ConfigError);
    CHECK_THROWS_AS(parse_reference("constant:-1"), ConfigError);
}

TEST_CASE("format_double round-trips") {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-17, 31.25, 1e300}) {
        CHECK(std::stod(format_double(v)) == v);
    }
}

TEST_CASE("trace CSV round trip") {
    auto s = Scenario::closed_loop_default();
    s.duration = 0.01;
    auto tr = run_closed_loop(s);
    std::stringstream buf;
    write_trace_csv(buf, tr);
    auto back = read_trace_csv(buf);
    CHECK(back.n == tr.n);
    CHECK(back.Ts == tr.Ts);
    CHECK(back.Vdc == doctest::Approx(tr.Vdc).epsilon(1e-12));
    CHECK(same_bits(back.t, tr.t));
    CHECK(same_bits(back.I1, tr.I1));
    CHECK(same_bits(back.I2, tr.I2));
    CHECK(same_bits(back.Is, tr.Is));
    CHECK(same_bits(back.Id, tr.Id));
    CHECK(same_bits(back.V1, tr.V1));
    CHECK(same_bits(back.V2, tr.V2));
    CHECK(same_bits(back.vc, tr.vc));
    CHECK(same_bits(back.n1, tr.n1));
    CHECK(same_bits(back.gates, tr.gates));
    CHECK(same_bits(back.Vc12des, tr.Vc12des));
    CHECK(same_bits(back.Ia_des, tr.Ia_des));
    CHECK(same_bits(back.J, tr.J));

    auto cols = trace_columns(2);
    CHECK(cols.size() == 9 + 4 + 3 + 4);
    CHECK(cols[9] == "vc1");
    CHECK(cols[13] == "n1");

    std::istringstream bad("t,I1\n0,1\n");
    CHECK_THROWS_AS(read_trace_csv(bad), InvalidInput);
}

TEST_CASE("open-loop NaN columns survive the CSV") {
    auto p = ConverterParams::verification_setup();
    std::vector<SwitchCommand> g(10, SwitchCommand::from_bits("100100"));
    auto tr = run_open_loop(p, g, 1e-3, FullState::uniform(3, 110.0));
    std::stringstream buf;
    write_trace_csv(buf, tr);
    auto back = read_trace_csv(buf);
    CHECK(std::isnan(back.Ia_des[3]));
    CHECK(same_bits(back.vc, tr.vc));
}

TEST_CASE("metric reports") {
    MetricReport a{{0.38, 0.40}, 0.010, 0.020, 1.5, 0.01, 0.02};
    MetricReport b{{0.38, 0.40}, 0.015, 0.030, 1.5, std::nullopt, 0.02};
    std::ostringstream text;
    write_metrics_text(text, {{"optimal", a}, {"constant", b}});
    CHECK(text.str().find("undefined") != std::string::npos);
    std::ostringstream csv;
    write_metrics_csv(csv, {{"optimal", a}});
    CHECK(csv.str().find("optimal") != std::string::npos);
    std::ostringstream cmp;
    write_comparison(cmp, {a}, {b});
    CHECK(cmp.str().find("-33.3") != std::string::npos);
    CHECK_THROWS_AS(write_comparison(cmp, {a}, {}), InvalidInput);
}

}  // TEST_SUITE
