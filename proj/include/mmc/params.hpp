#pragma once

#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace mmc {

/// Physical and electrical constants of one MMC leg and its load.
///
/// Capacitor indexing follows the circuit: 0..n-1 is the upper arm (top to bottom),
/// n..2n-1 the lower arm. `capacitances` may hold 2n per-cell values; when empty every
/// cell uses `C`.
struct ConverterParams {
    double L = 10e-3;       ///< arm inductance [H]
    double R = 0.1;         ///< arm resistance [Ohm]
    double C = 1000e-6;     ///< cell capacitance [F]
    int n = 8;              ///< cells per arm
    double La = 50e-3;      ///< load inductance [H]
    double Ra = 19.0;       ///< load resistance [Ohm]
    double Vdc = 250.0;     ///< DC source voltage in series with each arm [V]
    double VaM = 10.0;      ///< load source amplitude [V]
    double alphaVa = std::numbers::pi / 6.0;      ///< load source phase [rad]
    double omega = 2.0 * std::numbers::pi * 50.0; ///< fundamental [rad/s]
    double Ts = 1e-4;       ///< control period [s]
    std::vector<double> capacitances;

    /// n = 3 open-loop verification setup.
    static ConverterParams verification_setup();
    /// n = 8 closed-loop setup (the defaults above).
    static ConverterParams closed_loop_setup();

    int cell_count() const { return 2 * n; }
    double capacitance(int cell) const;
    bool uniform_capacitance() const;

    double total_capacitance() const { return n * C; }       // C_T
    double total_inductance() const { return L + 2.0 * La; } // L_T
    double total_resistance() const { return R + 2.0 * Ra; } // R_T
    /// |R + jwL| of one arm.
    double arm_impedance() const;
    /// Phase lag of the arm impedance, arctan(wL / R).
    double arm_phase() const;

    double load_voltage(double t) const;

    /// Throws ConfigError naming the offending field.
    void validate() const;
    /// Non-fatal issues (R = 0).
    std::vector<std::string> warnings() const;
};

/// Capacitor voltages plus the two arm currents.
struct FullState {
    std::vector<double> vc;
    double I1 = 0.0;
    double I2 = 0.0;

    static FullState uniform(int n, double vc0, double I1 = 0.0, double I2 = 0.0);

    int cells_per_arm() const { return static_cast<int>(vc.size() / 2); }
    std::span<const double> upper() const;
    std::span<const double> lower() const;
    double upper_mean() const;
    double lower_mean() const;
    bool finite() const;
};

/// Gate vector (1 = inserted) with its per-arm insertion counts.
struct SwitchCommand {
    std::vector<std::uint8_t> gates;
    int n1 = 0;
    int n2 = 0;

    static SwitchCommand from_gates(std::vector<std::uint8_t> gates);
    static SwitchCommand bypass_all(int n);

    /// Checks counts against the gate vector and the expected arm size.
    void validate(int n) const;
    std::string to_bits() const;
    static SwitchCommand from_bits(const std::string& bits);
};

/// Arm-mean capacitor voltages plus arm currents.
struct AverageState {
    double Vc1bar = 0.0;
    double Vc2bar = 0.0;
    double I1 = 0.0;
    double I2 = 0.0;
};

}  // namespace mmc
