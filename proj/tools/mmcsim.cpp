// mmcsim: scenario runs, harmonic tables, open-loop model verification and parameter sweeps.
//
// Exit codes: 0 success, 1 configuration error, 2 diverged simulation, 3 infeasible operating
// point, 4 verification threshold breach.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mmc/analysis.hpp"
#include "mmc/errors.hpp"
#include "mmc/harmonic.hpp"
#include "mmc/scenario_io.hpp"
#include "mmc/simulation.hpp"
#include "mmc/sweep.hpp"

namespace fs = std::filesystem;
using namespace mmc;

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kDiverged = 2, kInfeasible = 3, kVerifyBreach = 4 };

struct CommonOptions {
    std::string scenario;
    std::string out = ".";
    std::optional<double> duration;
    std::optional<long long> seed;
    std::vector<std::string> sets;
};

ScenarioFile load_with_overrides(const CommonOptions& opt) {
    ScenarioFile file = opt.scenario.empty() ? ScenarioFile{} : load_scenario(opt.scenario);
    for (const auto& entry : opt.sets) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--set expects key=value, got '" + entry + "'");
        }
        apply_override(file, entry.substr(0, eq), entry.substr(eq + 1));
    }
    if (opt.duration) file.scenario.duration = *opt.duration;
    if (opt.seed) {
        if (*opt.seed < 0) throw ConfigError("--seed must be >= 0");
        file.scenario.seed = static_cast<std::uint64_t>(*opt.seed);
    }
    return file;
}

fs::path prepare_out(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw ConfigError("cannot create output directory '" + dir + "'");
    }
    return fs::path(dir);
}

// Windows that fit inside the trace; the rest are reported and skipped.
std::vector<MetricReport> evaluate_windows(const Trace& trace, const std::vector<TimeWindow>& windows,
                                           double omega) {
    std::vector<MetricReport> reports;
    for (const auto& w : windows) {
        try {
            reports.push_back(metric_report(trace, w, omega));
        } catch (const InvalidInput& e) {
            std::cerr << "note: skipping window [" << w.start << ", " << w.end << "]: " << e.what()
                      << '\n';
        }
    }
    return reports;
}

void write_file(const fs::path& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    out << text;
}

int cmd_run(const CommonOptions& opt, const std::string& reference) {
    ScenarioFile file = load_with_overrides(opt);
    std::vector<std::pair<std::string, ReferenceSetting>> modes;
    if (reference == "both") {
        modes = {{"optimal", {ReferenceMode::Optimal}}, {"constant", {ReferenceMode::Constant}}};
    } else if (!reference.empty()) {
        const auto setting = parse_reference(reference);
        modes = {{setting.mode == ReferenceMode::Optimal ? "optimal" : "constant", setting}};
    } else {
        const auto& setting = file.scenario.reference;
        modes = {{setting.mode == ReferenceMode::Optimal ? "optimal" : "constant", setting}};
    }
    const fs::path out = prepare_out(opt.out);

    std::vector<LabelledReport> rows;
    std::vector<std::vector<MetricReport>> per_mode;
    for (const auto& [label, setting] : modes) {
        file.scenario.reference = setting;
        const Scenario scenario = file.resolved();
        const Trace trace = run_closed_loop(scenario);
        const auto trace_name = modes.size() == 1 ? "trace.csv" : "trace_" + label + ".csv";
        write_trace_csv(out / trace_name, trace);
        std::cout << label << ": " << trace.size() << " samples -> " << (out / trace_name).string()
                  << '\n';
        per_mode.push_back(evaluate_windows(trace, file.windows, scenario.params.omega));
        for (const auto& r : per_mode.back()) rows.push_back({label, r});
    }

    std::ostringstream text;
    write_metrics_text(text, rows);
    if (per_mode.size() == 2) {
        text << '\n';
        write_comparison(text, per_mode[0], per_mode[1]);
        std::ostringstream comparison;
        write_comparison(comparison, per_mode[0], per_mode[1]);
        write_file(out / "comparison.txt", comparison.str());
    }
    write_file(out / "metrics.txt", text.str());
    std::ostringstream csv;
    write_metrics_csv(csv, rows);
    write_file(out / "metrics.csv", csv.str());
    std::cout << text.str();
    return kOk;
}

void write_harmonic_table(std::ostream& out, const HarmonicSpec& spec, const HarmonicAnalysis& h,
                          bool simplified) {
    auto row = [&out](const char* name, double value, const char* unit) {
        out << "  " << std::left << std::setw(10) << name << std::right << std::setw(16)
            << std::setprecision(8) << value << "  " << unit << '\n';
    };
    out << "operating point: IaM = " << spec.IaM << " A, Vd0 = " << spec.Vd0
        << " V, VdM = " << spec.VdM << " V, alphaVd = " << spec.alphaVd << " rad\n";
    row("fM", h.fM, "V");
    row("alphaF", h.alphaF, "rad");
    row("alphaLR", h.alphaLR, "rad");
    row("IdM", h.IdM, "A");
    row("Id0", h.Id0, "A");
    row("C0", h.C0, "V^2");
    row("Vd0-", h.Vd0minus, "V");
    row("gamma", h.gamma, "rad");
    row("P10", h.P10, "W");
    row("P20", h.P20, "W");
    if (simplified) {
        row("P20(-g)", -0.5 * spec.VdM * std::hypot(h.a, h.b), "W  (alphaVd = -gamma)");
    }
}

int cmd_analyze(const CommonOptions& opt, double IaM, double VdM, double Vd0,
                std::optional<double> alphaVd, bool alpha_opt, bool out_given) {
    const ScenarioFile file = load_with_overrides(opt);
    const ConverterParams params = file.scenario.params;
    params.validate();
    auto spec = HarmonicSpec::for_params(params, IaM, Vd0, VdM, alphaVd.value_or(0.0));
    if (alpha_opt) {
        const Sinusoid f = feedforward_f(params, IaM, params.omega, params.alphaVa, params.VaM);
        spec.alphaVd = -P20_closed_form(params, spec, f).gamma;
    }
    const HarmonicAnalysis h = analyze(params, spec);
    std::ostringstream table;
    write_harmonic_table(table, spec, h, alpha_opt);
    std::cout << table.str();
    if (out_given) {
        write_file(prepare_out(opt.out) / "harmonic_table.txt", table.str());
    }
    if (!h.feasible) {
        std::cerr << "infeasible operating point: Vdc^2 = " << params.Vdc * params.Vdc
                  << " < C0 = " << h.C0 << "; no offset Vd0 makes the constant charging term P10 "
                  << "positive\n";
        return kInfeasible;
    }
    return kOk;
}

struct VerifyThresholds {
    double vc = 15e-3;
    double current = 20e-3;
    double arm_voltage = 40e-3;
};

int cmd_verify(const CommonOptions& opt, int refinement, double vc0, VerifyThresholds limits) {
    ScenarioFile file;
    file.scenario.params = ConverterParams::verification_setup();
    file.scenario.duration = 0.5;
    if (!opt.scenario.empty() || !opt.sets.empty()) {
        file = load_with_overrides(opt);
    }
    if (opt.duration) file.scenario.duration = *opt.duration;
    if (opt.seed) file.scenario.seed = static_cast<std::uint64_t>(*opt.seed);
    const ConverterParams& params = file.scenario.params;
    params.validate();

    const std::size_t steps = std::max<std::size_t>(step_count(file.scenario.duration, params.Ts), 1);
    const auto gates = seeded_gate_sequence(params, steps, file.scenario.seed, vc0);
    const FullState initial = FullState::uniform(params.n, vc0);
    const Trace main = run_open_loop(params, gates, file.scenario.duration, initial, 10);
    const Trace oracle = run_oracle(params, gates, file.scenario.duration, initial, refinement);

    double dvc = 0.0, dI = 0.0, dV = 0.0;
    for (std::size_t k = 0; k < main.size(); ++k) {
        for (std::size_t i = 0; i < static_cast<std::size_t>(2 * params.n); ++i) {
            dvc = std::max(dvc, std::abs(main.capacitors(k)[i] - oracle.capacitors(k)[i]));
        }
        dI = std::max({dI, std::abs(main.I1[k] - oracle.I1[k]), std::abs(main.I2[k] - oracle.I2[k])});
        dV = std::max({dV, std::abs(main.V1[k] - oracle.V1[k]), std::abs(main.V2[k] - oracle.V2[k])});
    }
    std::cout << std::scientific << std::setprecision(4)
              << "open-loop model vs " << refinement << "x refined oracle, n = " << params.n
              << ", " << file.scenario.duration << " s, seed " << file.scenario.seed << '\n'
              << "  max |capacitor voltage diff| " << dvc << " V  (limit " << limits.vc << ")\n"
              << "  max |arm current diff|       " << dI << " A  (limit " << limits.current << ")\n"
              << "  max |V1/V2 diff|             " << dV << " V  (limit " << limits.arm_voltage
              << ")\n";
    const double ratios[] = {dvc / limits.vc, dI / limits.current, dV / limits.arm_voltage};
    const char* names[] = {"capacitor voltage", "arm current", "arm voltage V1/V2"};
    const auto worst = static_cast<std::size_t>(std::max_element(std::begin(ratios), std::end(ratios)) -
                                                std::begin(ratios));
    if (ratios[worst] >= 1.0) {
        std::cerr << "verification failed; worst signal: " << names[worst] << " at "
                  << ratios[worst] << "x its limit\n";
        return kVerifyBreach;
    }
    std::cout << "verification passed\n";
    return kOk;
}

std::vector<std::string> split_alternatives(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, '|')) out.push_back(item);
    return out;
}

int cmd_sweep(const CommonOptions& opt, const std::vector<std::string>& vary, int threads,
              bool serial) {
    const ScenarioFile base = load_with_overrides(opt);
    std::vector<std::pair<ScenarioFile, std::string>> grid{{base, ""}};
    for (const auto& entry : vary) {
        const auto eq = entry.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("--vary expects key=v1|v2|..., got '" + entry + "'");
        }
        const std::string key = entry.substr(0, eq);
        std::vector<std::pair<ScenarioFile, std::string>> next;
        for (const auto& [file, label] : grid) {
            for (const auto& value : split_alternatives(entry.substr(eq + 1))) {
                ScenarioFile copy = file;
                apply_override(copy, key, value);
                next.emplace_back(std::move(copy),
                                  label + (label.empty() ? "" : " ") + key + "=" + value);
            }
        }
        grid = std::move(next);
    }
    std::vector<SweepCase> cases;
    for (const auto& [file, label] : grid) {
        cases.push_back({label.empty() ? "base" : label, file.resolved(), file.windows});
    }
    const auto results = serial ? run_sweep_serial(cases) : run_sweep_parallel(cases, threads);

    std::ostringstream csv;
    csv << "case,ok,samples,final_Vc1bar,final_Vc2bar,window_start,window_end,rms_eIa_A,"
           "max_abs_eIa_A,fundamental_A,thd,error\n";
    for (const auto& r : results) {
        auto prefix = [&] {
            return "\"" + r.label + "\"," + (r.ok ? "1" : "0") + "," + std::to_string(r.samples) +
                   "," + format_double(r.final_Vc1bar) + "," + format_double(r.final_Vc2bar) + ",";
        };
        if (!r.ok || r.metrics.empty()) {
            csv << prefix() << ",,,,,,\"" << r.error << "\"\n";
            continue;
        }
        for (const auto& m : r.metrics) {
            csv << prefix() << format_double(m.window.start) << ',' << format_double(m.window.end)
                << ',' << format_double(m.rmsEIa) << ',' << format_double(m.maxAbsEIa) << ','
                << format_double(m.fundamentalAmplitude) << ','
                << (m.thd ? format_double(*m.thd) : std::string("nan")) << ",\n";
        }
    }
    write_file(prepare_out(opt.out) / "sweep.csv", csv.str());
    std::size_t failed = 0;
    for (const auto& r : results) {
        std::cout << (r.ok ? "ok    " : "FAIL  ") << r.label;
        if (!r.ok) {
            std::cout << "  (" << r.error << ")";
            ++failed;
        }
        std::cout << '\n';
    }
    std::cout << results.size() << " cases, " << failed << " failed -> "
              << (fs::path(opt.out) / "sweep.csv").string() << '\n';
    return failed == 0 ? kOk : kDiverged;
}

void add_common(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--scenario", opt.scenario, "Scenario INI file");
    cmd->add_option("--out", opt.out, "Output directory");
    cmd->add_option("--duration", opt.duration, "Override run duration [s]");
    cmd->add_option("--seed", opt.seed, "Seed for randomized inputs");
    cmd->add_option("--set", opt.sets, "Override a scenario key, e.g. --set gains.Kd0=2e-4");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MMC leg simulator with predictive level control"};
    app.require_subcommand(1);

    CommonOptions run_opt, analyze_opt, verify_opt, sweep_opt;
    std::string reference;
    auto* run = app.add_subcommand("run", "Closed-loop simulation; writes trace.csv and metrics");
    add_common(run, run_opt);
    run->add_option("--reference", reference,
                    "optimal | constant | constant:VALUE | both (overrides the scenario)");

    double IaM = 1.5, VdM = 0.0, Vd0 = 0.0;
    std::optional<double> alphaVd;
    bool alpha_opt = false;
    auto* analyze_cmd = app.add_subcommand("analyze", "Steady-state harmonic table");
    add_common(analyze_cmd, analyze_opt);
    analyze_cmd->add_option("--IaM", IaM, "Load current amplitude [A]");
    analyze_cmd->add_option("--VdM", VdM, "Circulating voltage amplitude [V]");
    analyze_cmd->add_option("--Vd0", Vd0, "Circulating voltage offset [V]");
    auto* alpha_flag = analyze_cmd->add_option("--alphaVd", alphaVd, "Circulating voltage phase [rad]");
    analyze_cmd->add_flag("--alphaVd-opt", alpha_opt, "Use alphaVd = -gamma")->excludes(alpha_flag);

    int refinement = 100;
    double vc0 = 110.0;
    VerifyThresholds limits;
    auto* verify = app.add_subcommand("verify", "Open-loop model vs refined oracle");
    add_common(verify, verify_opt);
    verify->add_option("--refinement", refinement, "Oracle step refinement factor (>= 10)");
    verify->add_option("--vc0", vc0, "Initial and nominal cell voltage [V]");
    verify->add_option("--max-vc", limits.vc, "Capacitor voltage threshold [V]");
    verify->add_option("--max-current", limits.current, "Arm current threshold [A]");
    verify->add_option("--max-arm-voltage", limits.arm_voltage, "V1/V2 threshold [V]");

    std::vector<std::string> vary;
    int threads = 0;
    bool serial = false;
    auto* sweep = app.add_subcommand("sweep", "Grid of closed-loop runs");
    add_common(sweep, sweep_opt);
    sweep->add_option("--vary", vary, "key=v1|v2|... ; repeat for a cartesian grid");
    sweep->add_option("--threads", threads, "Worker threads (0 = OpenMP default)");
    sweep->add_flag("--serial", serial, "Use the single-threaded reference runner");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (*run) return cmd_run(run_opt, reference);
        if (*analyze_cmd) {
            return cmd_analyze(analyze_opt, IaM, VdM, Vd0, alphaVd, alpha_opt,
                               analyze_cmd->count("--out") > 0);
        }
        if (*verify) return cmd_verify(verify_opt, refinement, vc0, limits);
        if (*sweep) return cmd_sweep(sweep_opt, vary, threads, serial);
    } catch (const SimulationDiverged& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kDiverged;
    } catch (const InfeasibleOperatingPoint& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInfeasible;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kConfig;
    }
    return kConfig;
}
