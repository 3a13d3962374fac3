#include "mmc/params.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "mmc/errors.hpp"

namespace mmc {

namespace {

void require(bool ok, const std::string& field, const std::string& rule) {
    if (!ok) {
        throw ConfigError("params." + field + ": " + rule);
    }
}

}  // namespace

ConverterParams ConverterParams::verification_setup() {
    ConverterParams p;
    p.n = 3;
    return p;
}

ConverterParams ConverterParams::closed_loop_setup() { return ConverterParams{}; }

double ConverterParams::capacitance(int cell) const {
    if (capacitances.empty()) {
        return C;
    }
    return capacitances.at(static_cast<std::size_t>(cell));
}

bool ConverterParams::uniform_capacitance() const {
    return std::all_of(capacitances.begin(), capacitances.end(),
                       [this](double c) { return c == C; });
}

double ConverterParams::arm_impedance() const { return std::hypot(R, L * omega); }

double ConverterParams::arm_phase() const { return std::atan2(L * omega, R); }

double ConverterParams::load_voltage(double t) const {
    return VaM * std::sin(omega * t + alphaVa);
}

void ConverterParams::validate() const {
    require(n >= 1, "n", "must be >= 1");
    require(std::isfinite(L) && L > 0.0, "L", "must be > 0");
    require(std::isfinite(C) && C > 0.0, "C", "must be > 0");
    require(std::isfinite(La) && La > 0.0, "La", "must be > 0");
    require(std::isfinite(Ts) && Ts > 0.0, "Ts", "must be > 0");
    require(std::isfinite(R) && R >= 0.0, "R", "must be >= 0");
    require(std::isfinite(Ra) && Ra >= 0.0, "Ra", "must be >= 0");
    require(std::isfinite(Vdc) && Vdc >= 0.0, "Vdc", "must be >= 0");
    require(std::isfinite(VaM) && VaM >= 0.0, "VaM", "must be >= 0");
    require(std::isfinite(alphaVa), "alphaVa", "must be finite");
    require(std::isfinite(omega) && omega > 0.0, "omega", "must be > 0");
    if (!capacitances.empty()) {
        std::ostringstream rule;
        rule << "needs exactly 2n = " << cell_count() << " entries, got " << capacitances.size();
        require(capacitances.size() == static_cast<std::size_t>(cell_count()), "capacitances",
                rule.str());
        for (double c : capacitances) {
            require(std::isfinite(c) && c > 0.0, "capacitances", "entries must be > 0");
        }
    }
}

std::vector<std::string> ConverterParams::warnings() const {
    std::vector<std::string> out;
    if (R == 0.0) {
        out.emplace_back(
            "params.R is 0: the steady-state circulating-current offset Vd0/R is undefined, "
            "the closed-loop controller will refuse this configuration");
    }
    return out;
}

FullState FullState::uniform(int n, double vc0, double I1, double I2) {
    FullState s;
    s.vc.assign(static_cast<std::size_t>(2 * n), vc0);
    s.I1 = I1;
    s.I2 = I2;
    return s;
}

std::span<const double> FullState::upper() const {
    return std::span<const double>(vc).first(vc.size() / 2);
}

std::span<const double> FullState::lower() const {
    return std::span<const double>(vc).last(vc.size() / 2);
}

double FullState::upper_mean() const {
    auto arm = upper();
    return std::accumulate(arm.begin(), arm.end(), 0.0) / static_cast<double>(arm.size());
}

double FullState::lower_mean() const {
    auto arm = lower();
    return std::accumulate(arm.begin(), arm.end(), 0.0) / static_cast<double>(arm.size());
}

bool FullState::finite() const {
    return std::isfinite(I1) && std::isfinite(I2) &&
           std::all_of(vc.begin(), vc.end(), [](double v) { return std::isfinite(v); });
}

SwitchCommand SwitchCommand::from_gates(std::vector<std::uint8_t> gates) {
    if (gates.empty() || gates.size() % 2 != 0) {
        throw InvalidInput("gate vector length must be a positive even number, got " +
                           std::to_string(gates.size()));
    }
    SwitchCommand cmd;
    const std::size_t n = gates.size() / 2;
    for (std::size_t i = 0; i < gates.size(); ++i) {
        if (gates[i] > 1) {
            throw InvalidInput("gate values must be 0 or 1");
        }
        (i < n ? cmd.n1 : cmd.n2) += gates[i];
    }
    cmd.gates = std::move(gates);
    return cmd;
}

SwitchCommand SwitchCommand::bypass_all(int n) {
    return from_gates(std::vector<std::uint8_t>(static_cast<std::size_t>(2 * n), 0));
}

void SwitchCommand::validate(int n) const {
    if (gates.size() != static_cast<std::size_t>(2 * n)) {
        throw InvalidInput("gate vector has " + std::to_string(gates.size()) +
                           " entries, expected 2n = " + std::to_string(2 * n));
    }
    int upper = 0;
    int lower = 0;
    for (int i = 0; i < 2 * n; ++i) {
        if (gates[i] > 1) {
            throw InvalidInput("gate values must be 0 or 1");
        }
        (i < n ? upper : lower) += gates[i];
    }
    if (upper != n1 || lower != n2) {
        throw InvalidInput("insertion counts (" + std::to_string(n1) + ", " + std::to_string(n2) +
                           ") do not match gate vector (" + std::to_string(upper) + ", " +
                           std::to_string(lower) + ")");
    }
}

std::string SwitchCommand::to_bits() const {
    std::string bits(gates.size(), '0');
    for (std::size_t i = 0; i < gates.size(); ++i) {
        if (gates[i]) bits[i] = '1';
    }
    return bits;
}

SwitchCommand SwitchCommand::from_bits(const std::string& bits) {
    std::vector<std::uint8_t> gates(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) {
        if (bits[i] != '0' && bits[i] != '1') {
            throw InvalidInput("gate string may only contain 0 and 1: '" + bits + "'");
        }
        gates[i] = bits[i] == '1';
    }
    return from_gates(std::move(gates));
}

}  // namespace mmc
