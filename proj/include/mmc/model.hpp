#pragma once

#include <array>
#include <span>
#include <vector>

#include "mmc/params.hpp"

namespace mmc {

/// Row-major 2x2 matrix.
struct Mat2 {
    std::array<double, 4> m{};

    double operator()(int r, int c) const { return m[static_cast<std::size_t>(2 * r + c)]; }
    Mat2 operator*(const Mat2& o) const;
    std::array<double, 2> operator*(const std::array<double, 2>& v) const;
    Mat2 transposed() const;
    double determinant() const { return m[0] * m[3] - m[1] * m[2]; }
    Mat2 inverse() const;
};

struct ArmVoltages {
    double V1 = 0.0;
    double V2 = 0.0;
};

/// V1 = Vdc - sum of inserted upper voltages, V2 = -Vdc + sum of inserted lower voltages.
ArmVoltages arm_voltages(const ConverterParams& params, const SwitchCommand& cmd,
                         std::span<const double> vc);

/// Arm voltages of the averaged model for insertion counts (n1, n2).
ArmVoltages level_voltages(const ConverterParams& params, int n1, int n2, double Vc1bar,
                           double Vc2bar);

/// Coupled arm-inductance network: L_L * dI/dt = A_L * I + [V1 - Va; V2 - Va].
///
/// The inverse of L_L is computed once at construction.
class ArmInductance {
 public:
    explicit ArmInductance(const ConverterParams& params);

    const Mat2& inductance() const { return inductance_; }
    const Mat2& resistance() const { return resistance_; }  // A_L (negative definite)
    const Mat2& inverse_inductance() const { return inverse_; }

    std::array<double, 2> current_rates(double I1, double I2, double V1, double V2,
                                        double Va) const;

 private:
    Mat2 inductance_;
    Mat2 resistance_;
    Mat2 inverse_;
};

/// Full switched model: 2n capacitor voltages plus two arm currents.
class FullModel {
 public:
    explicit FullModel(ConverterParams params);

    const ConverterParams& params() const { return params_; }
    const ArmInductance& arms() const { return arms_; }

    /// Time derivative of `state` under `cmd` and load source voltage `Va`.
    FullState derivative(const FullState& state, const SwitchCommand& cmd, double Va) const;

    /// Same as derivative() without allocation; `vc_rate` must hold 2n entries.
    void derivative_into(std::span<const double> vc, double I1, double I2,
                         std::span<const std::uint8_t> gates, double Va,
                         std::span<double> vc_rate, double& dI1, double& dI2) const;

    /// Stored energy 1/2 sum C_i vc_i^2 + 1/2 I^T L_L I.
    double stored_energy(const FullState& state) const;

 private:
    ConverterParams params_;
    ArmInductance arms_;
    std::vector<double> inverse_capacitance_;
};

FullState full_model_derivative(const ConverterParams& params, const FullState& state,
                                const SwitchCommand& cmd, double Va);

AverageState average_model_derivative(const ConverterParams& params, const AverageState& state,
                                      int n1, int n2, double Va);

struct TransformedCurrents {
    double Is = 0.0;  ///< load current I1 + I2
    double Id = 0.0;  ///< circulating current I1 - I2
};

TransformedCurrents sum_diff_transform(double I1, double I2);
std::array<double, 2> inverse_transform(double Is, double Id);

struct TransformedSignals {
    double Is = 0.0;
    double Id = 0.0;
    double Vs = 0.0;
    double Vd = 0.0;
};

TransformedSignals transform_signals(double I1, double I2, double V1, double V2);

/// L_w = T_w^T L_L T_w and A_w = T_w^T A_L T_w.
struct CongruentPair {
    Mat2 Lw;
    Mat2 Aw;
};

Mat2 sum_diff_matrix();  // T_w
CongruentPair congruent_transform(const ConverterParams& params);

struct DecoupledRates {
    double dIs = 0.0;
    double dId = 0.0;
};

/// L_T dIs/dt = -R_T Is - 2 Va + Vs ;  L dId/dt = -R Id + Vd.
DecoupledRates decoupled_dynamics(const ConverterParams& params, double Is, double Id, double Vs,
                                  double Vd, double Va);

struct SquaredVoltageRates {
    double dV1sq = 0.0;  ///< d(Vc1bar^2)/dt
    double dV2sq = 0.0;  ///< d(Vc2bar^2)/dt
    double P1 = 0.0;
    double P2 = 0.0;
};

/// Capacitive dynamics in squared-voltage coordinates with the load current pinned to its
/// reference `Ia_des` and Vs replaced by the feedforward value `f`:
///   2 C_T d(Vc1^2)/dt = P1 + P2,  2 C_T d(Vc2^2)/dt = P1 - P2.
SquaredVoltageRates squared_voltage_dynamics(const ConverterParams& params, double Vd, double Id,
                                             double Ia_des, double f);

struct ArmMeanRates {
    double dVc1 = 0.0;
    double dVc2 = 0.0;
};

/// Arm-mean voltage rates in transformed coordinates:
///   4 C_T Vc1 dVc1/dt = (2Vdc - Vs - Vd)(Is + Id)
///   4 C_T Vc2 dVc2/dt = -(2Vdc + Vs - Vd)(Is - Id)
ArmMeanRates transformed_mean_rates(const ConverterParams& params, double Vc1bar, double Vc2bar,
                                    double Vs, double Vd, double Is, double Id);

}  // namespace mmc
