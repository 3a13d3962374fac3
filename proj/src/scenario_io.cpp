#include "mmc/scenario_io.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <numbers>
#include <sstream>

#include "mmc/errors.hpp"

namespace mmc {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

// Inline comments: '#' or ';' preceded by whitespace.
std::string_view strip_comment(std::string_view s) {
    for (std::size_t i = 1; i < s.size(); ++i) {
        if ((s[i] == '#' || s[i] == ';') && (s[i - 1] == ' ' || s[i - 1] == '\t')) {
            return trim(s.substr(0, i));
        }
    }
    return trim(s);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = s.find(sep, start);
        out.push_back(trim(s.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

double to_double(std::string_view key, std::string_view text) {
    text = trim(text);
    double value = 0.0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(text) + "'");
    }
    return value;
}

long long to_integer(std::string_view key, std::string_view text) {
    text = trim(text);
    long long value = 0;
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc() || ptr != end || text.empty()) {
        throw ConfigError(std::string(key) + ": expected an integer, got '" + std::string(text) + "'");
    }
    return value;
}

std::vector<double> to_list(std::string_view key, std::string_view text) {
    std::vector<double> out;
    if (trim(text).empty()) return out;
    for (auto item : split(text, ',')) out.push_back(to_double(key, item));
    return out;
}

std::vector<std::pair<double, double>> to_pairs(std::string_view key, std::string_view text) {
    std::vector<std::pair<double, double>> out;
    if (trim(text).empty()) return out;
    for (auto item : split(text, ',')) {
        const auto parts = split(item, ':');
        if (parts.size() != 2) {
            throw ConfigError(std::string(key) + ": expected 'a:b' entries, got '" +
                              std::string(item) + "'");
        }
        out.emplace_back(to_double(key, parts[0]), to_double(key, parts[1]));
    }
    return out;
}

using Setter = std::function<void(ScenarioFile&, std::string_view key, std::string_view value)>;

const std::map<std::string, Setter, std::less<>>& setters() {
    static const std::map<std::string, Setter, std::less<>> table = [] {
        std::map<std::string, Setter, std::less<>> t;
        auto param = [&t](const char* name, double ConverterParams::*field) {
            t[std::string("params.") + name] = [field](ScenarioFile& f, auto key, auto v) {
                f.scenario.params.*field = to_double(key, v);
            };
        };
        param("L", &ConverterParams::L);
        param("R", &ConverterParams::R);
        param("C", &ConverterParams::C);
        param("La", &ConverterParams::La);
        param("Ra", &ConverterParams::Ra);
        param("Vdc", &ConverterParams::Vdc);
        param("VaM", &ConverterParams::VaM);
        param("alphaVa", &ConverterParams::alphaVa);
        param("omega", &ConverterParams::omega);
        param("Ts", &ConverterParams::Ts);
        t["params.n"] = [](ScenarioFile& f, auto key, auto v) {
            f.scenario.params.n = static_cast<int>(to_integer(key, v));
        };
        t["params.frequency_hz"] = [](ScenarioFile& f, auto key, auto v) {
            f.scenario.params.omega = 2.0 * std::numbers::pi * to_double(key, v);
        };
        t["params.capacitances"] = [](ScenarioFile& f, auto key, auto v) {
            f.scenario.params.capacitances = to_list(key, v);
        };

        auto gain = [&t](const char* name, double ControllerGains::*field) {
            t[std::string("gains.") + name] = [field](ScenarioFile& f, auto key, auto v) {
                f.scenario.gains.*field = to_double(key, v);
            };
        };
        gain("KdM", &ControllerGains::KdM);
        gain("Kd0", &ControllerGains::Kd0);
        gain("tau", &ControllerGains::tau);
        gain("alpha1", &ControllerGains::alpha1);
        gain("alpha2", &ControllerGains::alpha2);
        t["gains.wn"] = [](ScenarioFile& f, auto key, auto v) {
            f.scenario.gains.wn = static_cast<int>(to_integer(key, v));
        };

        t["schedule.steps"] = [](ScenarioFile& f, auto key, auto v) {
            f.scenario.schedule.steps.clear();
            for (auto [start, amplitude] : to_pairs(key, v)) {
                f.scenario.schedule.steps.push_back({start, amplitude});
            }
        };

        t["run.duration"] = [](ScenarioFile& f, auto key, auto v) {
            f.scenario.duration = to_double(key, v);
        };
        t["run.reference"] = [](ScenarioFile& f, auto key, auto v) {
            try {
                f.scenario.reference = parse_reference(v);
            } catch (const ConfigError& e) {
                throw ConfigError(std::string(key) + ": " + e.what());
            }
        };
        t["run.integrator"] = [](ScenarioFile& f, auto key, auto v) {
            const auto text = trim(v);
            if (text == "rk4") {
                f.scenario.integrator = IntegrationMethod::Rk4InnerStep;
            } else if (text == "euler") {
                f.scenario.integrator = IntegrationMethod::EulerTs;
            } else {
                throw ConfigError(std::string(key) + ": expected 'rk4' or 'euler', got '" +
                                  std::string(text) + "'");
            }
        };
        t["run.substeps"] = [](ScenarioFile& f, auto key, auto v) {
            f.scenario.substeps = static_cast<int>(to_integer(key, v));
        };
        t["run.seed"] = [](ScenarioFile& f, auto key, auto v) {
            const auto value = to_integer(key, v);
            if (value < 0) throw ConfigError(std::string(key) + ": must be >= 0");
            f.scenario.seed = static_cast<std::uint64_t>(value);
        };
        t["run.initial_vc"] = [](ScenarioFile& f, auto key, auto v) {
            f.initial_vc = to_list(key, v);
        };
        t["run.initial_I1"] = [](ScenarioFile& f, auto key, auto v) {
            f.initial_I1 = to_double(key, v);
        };
        t["run.initial_I2"] = [](ScenarioFile& f, auto key, auto v) {
            f.initial_I2 = to_double(key, v);
        };
        t["run.windows"] = [](ScenarioFile& f, auto key, auto v) {
            f.windows.clear();
            for (auto [start, end] : to_pairs(key, v)) f.windows.push_back({start, end});
        };
        return t;
    }();
    return table;
}

std::string format_or_nan(double v) { return std::isnan(v) ? "nan" : format_double(v); }

}  // namespace

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] =
        std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    return ec == std::errc() ? std::string(buf, ptr) : std::string("nan");
}

Scenario ScenarioFile::resolved() const {
    Scenario s = scenario;
    s.schedule.omega = s.params.omega;
    const int n = s.params.n;
    if (n < 1) {
        throw ConfigError("params.n: must be >= 1, got " + std::to_string(n));
    }
    const auto cells = static_cast<std::size_t>(2 * n);
    if (initial_vc.empty()) {
        s.initial = FullState::uniform(n, s.params.Vdc / n, initial_I1, initial_I2);
    } else if (initial_vc.size() == 1) {
        s.initial = FullState::uniform(n, initial_vc.front(), initial_I1, initial_I2);
    } else if (initial_vc.size() == cells) {
        s.initial.vc = initial_vc;
        s.initial.I1 = initial_I1;
        s.initial.I2 = initial_I2;
    } else {
        throw ConfigError("run.initial_vc: expected 1 or 2n = " + std::to_string(cells) +
                          " values, got " + std::to_string(initial_vc.size()));
    }
    for (const auto& w : windows) {
        if (!(w.end > w.start) || w.start < 0.0) {
            throw ConfigError("run.windows: each window needs 0 <= start < end");
        }
    }
    s.validate();
    return s;
}

ReferenceSetting parse_reference(std::string_view text) {
    text = trim(text);
    if (text == "optimal") return {ReferenceMode::Optimal};
    if (text == "constant") return {ReferenceMode::Constant};
    if (text.starts_with("constant:")) {
        const double value = to_double("reference", text.substr(9));
        if (!(value > 0.0) || !std::isfinite(value)) {
            throw ConfigError("constant reference must be a positive voltage");
        }
        return {ReferenceMode::Constant, value};
    }
    throw ConfigError("expected 'optimal', 'constant' or 'constant:VALUE', got '" +
                      std::string(text) + "'");
}

std::string format_reference(const ReferenceSetting& reference) {
    if (reference.mode == ReferenceMode::Optimal) return "optimal";
    if (std::isnan(reference.value)) return "constant";
    return "constant:" + format_double(reference.value);
}

void apply_override(ScenarioFile& file, std::string_view dotted_key, std::string_view value) {
    const auto it = setters().find(dotted_key);
    if (it == setters().end()) {
        throw ConfigError("unknown scenario key '" + std::string(dotted_key) + "'");
    }
    it->second(file, dotted_key, strip_comment(value));
}

ScenarioFile parse_scenario(std::istream& in, const std::string& source) {
    boost::property_tree::ptree tree;
    try {
        boost::property_tree::read_ini(in, tree);
    } catch (const boost::property_tree::ini_parser_error& e) {
        throw ConfigError(source + ": " + e.message() + " (line " + std::to_string(e.line()) + ")");
    }
    ScenarioFile file;
    for (const auto& [section, entries] : tree) {
        if (entries.empty() && !entries.data().empty()) {
            throw ConfigError(source + ": key '" + section + "' must be inside a section");
        }
        if (section != "params" && section != "gains" && section != "schedule" && section != "run") {
            throw ConfigError(source + ": unknown section [" + section + "]");
        }
        for (const auto& [key, node] : entries) {
            const std::string dotted = section + "." + key;
            try {
                apply_override(file, dotted, node.data());
            } catch (const ConfigError& e) {
                throw ConfigError(source + ": " + e.what());
            }
        }
    }
    return file;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open scenario file '" + path.string() + "'");
    }
    return parse_scenario(in, path.string());
}

std::vector<std::string> trace_columns(int n) {
    std::vector<std::string> cols{"t", "I1", "I2", "Is", "Id", "V1", "V2", "Vc1bar", "Vc2bar"};
    for (int i = 1; i <= 2 * n; ++i) cols.push_back("vc" + std::to_string(i));
    for (const char* c : {"n1", "n2", "gates", "Vc12des", "Ia_des", "Id_des", "J"}) {
        cols.emplace_back(c);
    }
    return cols;
}

void write_trace_csv(std::ostream& out, const Trace& trace) {
    const auto cols = trace_columns(trace.n);
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
    std::string line;
    for (std::size_t k = 0; k < trace.size(); ++k) {
        line.clear();
        for (double v : {trace.t[k], trace.I1[k], trace.I2[k], trace.Is[k], trace.Id[k],
                         trace.V1[k], trace.V2[k], trace.Vc1bar[k], trace.Vc2bar[k]}) {
            line += format_double(v);
            line += ',';
        }
        for (double v : trace.capacitors(k)) {
            line += format_double(v);
            line += ',';
        }
        line += std::to_string(trace.n1[k]) + ',' + std::to_string(trace.n2[k]) + ',';
        for (auto g : trace.gate_vector(k)) line += g ? '1' : '0';
        for (double v : {trace.Vc12des[k], trace.Ia_des[k], trace.Id_des[k], trace.J[k]}) {
            line += ',';
            line += format_or_nan(v);
        }
        out << line << '\n';
    }
}

void write_trace_csv(const std::filesystem::path& path, const Trace& trace) {
    std::ofstream out(path);
    if (!out) {
        throw ConfigError("cannot write '" + path.string() + "'");
    }
    write_trace_csv(out, trace);
}

Trace read_trace_csv(std::istream& in) {
    std::string header;
    if (!std::getline(in, header)) {
        throw InvalidInput("trace CSV is empty");
    }
    const auto names = split(header, ',');
    std::size_t vc_count = 0;
    for (auto name : names) {
        if (name.starts_with("vc")) ++vc_count;
    }
    if (vc_count == 0 || vc_count % 2 != 0) {
        throw InvalidInput("trace CSV header has no even set of vc columns");
    }
    Trace trace;
    trace.n = static_cast<int>(vc_count / 2);
    const auto expected = trace_columns(trace.n);
    if (names.size() != expected.size() ||
        !std::equal(names.begin(), names.end(), expected.begin())) {
        throw InvalidInput("trace CSV header does not match the expected column order");
    }
    std::string line;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto fields = split(line, ',');
        if (fields.size() != expected.size()) {
            throw InvalidInput("trace CSV row " + std::to_string(row) + " has " +
                               std::to_string(fields.size()) + " fields");
        }
        auto num = [&](std::size_t i) { return to_double(expected[i], fields[i]); };
        std::size_t i = 0;
        for (auto* column : {&trace.t, &trace.I1, &trace.I2, &trace.Is, &trace.Id, &trace.V1,
                             &trace.V2, &trace.Vc1bar, &trace.Vc2bar}) {
            column->push_back(num(i++));
        }
        for (std::size_t c = 0; c < vc_count; ++c) trace.vc.push_back(num(i++));
        trace.n1.push_back(static_cast<int>(to_integer("n1", fields[i++])));
        trace.n2.push_back(static_cast<int>(to_integer("n2", fields[i++])));
        const auto bits = fields[i++];
        if (bits.size() != vc_count) {
            throw InvalidInput("trace CSV row " + std::to_string(row) + ": gates width mismatch");
        }
        for (char b : bits) trace.gates.push_back(b == '1' ? 1 : 0);
        for (auto* column : {&trace.Vc12des, &trace.Ia_des, &trace.Id_des, &trace.J}) {
            column->push_back(num(i++));
        }
    }
    if (trace.size() >= 2) {
        trace.Ts = trace.t[1] - trace.t[0];
    }
    if (trace.size() >= 1) {
        // V1 = Vdc - (inserted upper voltages) recovers Vdc from the first row.
        double inserted = 0.0;
        for (int c = 0; c < trace.n; ++c) {
            if (trace.gates[static_cast<std::size_t>(c)]) inserted += trace.vc[static_cast<std::size_t>(c)];
        }
        trace.Vdc = trace.V1[0] + inserted;
    }
    return trace;
}

void write_metrics_csv(std::ostream& out, const std::vector<LabelledReport>& rows) {
    out << "label,window_start,window_end,rms_eIa_A,max_abs_eIa_A,fundamental_A,thd,"
           "avg_spectrum_A\n";
    for (const auto& [label, r] : rows) {
        out << label << ',' << format_double(r.window.start) << ',' << format_double(r.window.end)
            << ',' << format_double(r.rmsEIa) << ',' << format_double(r.maxAbsEIa) << ','
            << format_double(r.fundamentalAmplitude) << ','
            << (r.thd ? format_double(*r.thd) : std::string("nan")) << ','
            << format_double(r.avgSpectrum) << '\n';
    }
}

void write_metrics_text(std::ostream& out, const std::vector<LabelledReport>& rows) {
    out << std::left << std::setw(12) << "label" << std::setw(16) << "window [s]" << std::right
        << std::setw(14) << "RMS(eIa) mA" << std::setw(16) << "max|eIa| mA" << std::setw(14)
        << "A1 [A]" << std::setw(12) << "THD" << std::setw(14) << "avg A_k [A]" << '\n';
    for (const auto& [label, r] : rows) {
        std::ostringstream window;
        window << std::fixed << std::setprecision(2) << '[' << r.window.start << ", "
               << r.window.end << ']';
        out << std::left << std::setw(12) << label << std::setw(16) << window.str() << std::right
            << std::fixed << std::setprecision(3) << std::setw(14) << r.rmsEIa * 1e3
            << std::setw(16) << r.maxAbsEIa * 1e3 << std::setw(14) << r.fundamentalAmplitude;
        if (r.thd) {
            out << std::setw(12) << std::setprecision(5) << *r.thd;
        } else {
            out << std::setw(12) << "undefined";
        }
        out << std::setw(14) << std::setprecision(5) << r.avgSpectrum << '\n';
        out.unsetf(std::ios::fixed);
    }
}

void write_comparison(std::ostream& out, const std::vector<MetricReport>& optimal,
                      const std::vector<MetricReport>& constant) {
    if (optimal.size() != constant.size()) {
        throw InvalidInput("comparison needs the same windows for both modes");
    }
    auto change = [](double a, double b) {
        std::ostringstream s;
        s << std::showpos << std::fixed << std::setprecision(2) << 100.0 * (a - b) / b << " %";
        return s.str();
    };
    out << "Optimal vs constant reference (change relative to constant)\n";
    for (std::size_t i = 0; i < optimal.size(); ++i) {
        const auto& o = optimal[i];
        const auto& c = constant[i];
        out << std::fixed << std::setprecision(2) << "\nwindow [" << o.window.start << ", "
            << o.window.end << "] s\n";
        out << std::setprecision(3);
        out << "  RMS(eIa) [mA]     constant " << std::setw(9) << c.rmsEIa * 1e3 << "   optimal "
            << std::setw(9) << o.rmsEIa * 1e3 << "   " << change(o.rmsEIa, c.rmsEIa) << '\n';
        out << "  max|eIa| [mA]     constant " << std::setw(9) << c.maxAbsEIa * 1e3
            << "   optimal " << std::setw(9) << o.maxAbsEIa * 1e3 << "   "
            << change(o.maxAbsEIa, c.maxAbsEIa) << '\n';
        out << std::setprecision(5);
        if (o.thd && c.thd) {
            out << "  THD(Is)           constant " << std::setw(9) << *c.thd << "   optimal "
                << std::setw(9) << *o.thd << "   " << change(*o.thd, *c.thd) << '\n';
        } else {
            out << "  THD(Is)           undefined (zero fundamental)\n";
        }
        out << "  avg A_k [A]       constant " << std::setw(9) << c.avgSpectrum << "   optimal "
            << std::setw(9) << o.avgSpectrum << '\n';
    }
    out.unsetf(std::ios::fixed);
}

}  // namespace mmc
