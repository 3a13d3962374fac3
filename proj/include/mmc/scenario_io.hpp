#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mmc/analysis.hpp"
#include "mmc/simulation.hpp"

namespace mmc {

/// Scenario as read from an INI file, before the initial state is sized to n.
///
/// Sections and keys (all optional; an empty file gives the n = 8 stepped scenario):
///   [params]   L R C n La Ra Vdc VaM alphaVa omega frequency_hz Ts capacitances
///   [gains]    KdM Kd0 tau alpha1 alpha2 wn
///   [schedule] steps = "start:amplitude, ..."
///   [run]      duration reference integrator substeps seed initial_vc initial_I1 initial_I2
///              windows = "start:end, ..."
/// Angles are in radians, omega in rad/s. Lists are comma separated.
struct ScenarioFile {
    Scenario scenario = Scenario::closed_loop_default();
    /// Empty: every cell at Vdc / n. One value: every cell at that value. 2n values: per cell.
    std::vector<double> initial_vc;
    double initial_I1 = 0.0;
    double initial_I2 = 0.0;
    std::vector<TimeWindow> windows = default_windows();

    /// Sizes the initial state, ties the schedule frequency to params.omega and validates.
    Scenario resolved() const;
};

/// Throws ConfigError naming the file, section or key at fault.
ScenarioFile load_scenario(const std::filesystem::path& path);
ScenarioFile parse_scenario(std::istream& in, const std::string& source = "<stream>");

/// Sets one "section.key" entry, with the same parsing and checks as the file reader.
void apply_override(ScenarioFile& file, std::string_view dotted_key, std::string_view value);

/// "optimal", "constant" (worst-case value) or "constant:VALUE".
ReferenceSetting parse_reference(std::string_view text);
std::string format_reference(const ReferenceSetting& reference);

/// Column order: t, I1, I2, Is, Id, V1, V2, Vc1bar, Vc2bar, vc1..vc2n, n1, n2, gates,
/// Vc12des, Ia_des, Id_des, J. `gates` is a 2n-character 0/1 string, upper arm first.
std::vector<std::string> trace_columns(int n);
void write_trace_csv(std::ostream& out, const Trace& trace);
void write_trace_csv(const std::filesystem::path& path, const Trace& trace);
Trace read_trace_csv(std::istream& in);

struct LabelledReport {
    std::string label;
    MetricReport report;
};

void write_metrics_csv(std::ostream& out, const std::vector<LabelledReport>& rows);
void write_metrics_text(std::ostream& out, const std::vector<LabelledReport>& rows);

/// Side-by-side optimal vs constant table with relative changes.
void write_comparison(std::ostream& out, const std::vector<MetricReport>& optimal,
                      const std::vector<MetricReport>& constant);

/// 17 significant digits; parses back to the identical double.
std::string format_double(double value);

}  // namespace mmc
