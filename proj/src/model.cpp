#include "mmc/model.hpp"

#include <cmath>
#include <string>

#include "mmc/errors.hpp"

namespace mmc {

Mat2 Mat2::operator*(const Mat2& o) const {
    return Mat2{{m[0] * o.m[0] + m[1] * o.m[2], m[0] * o.m[1] + m[1] * o.m[3],
                 m[2] * o.m[0] + m[3] * o.m[2], m[2] * o.m[1] + m[3] * o.m[3]}};
}

std::array<double, 2> Mat2::operator*(const std::array<double, 2>& v) const {
    return {m[0] * v[0] + m[1] * v[1], m[2] * v[0] + m[3] * v[1]};
}

Mat2 Mat2::transposed() const { return Mat2{{m[0], m[2], m[1], m[3]}}; }

Mat2 Mat2::inverse() const {
    const double det = determinant();
    if (det == 0.0 || !std::isfinite(det)) {
        throw ConfigError("singular 2x2 matrix");
    }
    return Mat2{{m[3] / det, -m[1] / det, -m[2] / det, m[0] / det}};
}

ArmVoltages arm_voltages(const ConverterParams& params, const SwitchCommand& cmd,
                         std::span<const double> vc) {
    const auto n = static_cast<std::size_t>(params.n);
    if (vc.size() != 2 * n) {
        throw InvalidInput("capacitor voltage vector has " + std::to_string(vc.size()) +
                           " entries, expected " + std::to_string(2 * n));
    }
    cmd.validate(params.n);
    double upper = 0.0;
    double lower = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (cmd.gates[i]) upper += vc[i];
        if (cmd.gates[n + i]) lower += vc[n + i];
    }
    return {params.Vdc - upper, -params.Vdc + lower};
}

ArmVoltages level_voltages(const ConverterParams& params, int n1, int n2, double Vc1bar,
                           double Vc2bar) {
    return {params.Vdc - n1 * Vc1bar, -params.Vdc + n2 * Vc2bar};
}

ArmInductance::ArmInductance(const ConverterParams& params) {
    if (!(params.L > 0.0) || !(params.L + 2.0 * params.La > 0.0)) {
        throw ConfigError("arm inductance matrix is singular: L must be > 0 and L + 2 La > 0");
    }
    inductance_ = Mat2{{params.L + params.La, params.La, params.La, params.L + params.La}};
    resistance_ = Mat2{{-(params.R + params.Ra), -params.Ra, -params.Ra, -(params.R + params.Ra)}};
    inverse_ = inductance_.inverse();
}

std::array<double, 2> ArmInductance::current_rates(double I1, double I2, double V1, double V2,
                                                   double Va) const {
    const auto drive = resistance_ * std::array<double, 2>{I1, I2};
    return inverse_ * std::array<double, 2>{drive[0] + V1 - Va, drive[1] + V2 - Va};
}

FullModel::FullModel(ConverterParams params) : params_(std::move(params)), arms_(params_) {
    params_.validate();
    inverse_capacitance_.resize(static_cast<std::size_t>(params_.cell_count()));
    for (int i = 0; i < params_.cell_count(); ++i) {
        inverse_capacitance_[static_cast<std::size_t>(i)] = 1.0 / params_.capacitance(i);
    }
}

void FullModel::derivative_into(std::span<const double> vc, double I1, double I2,
                                std::span<const std::uint8_t> gates, double Va,
                                std::span<double> vc_rate, double& dI1, double& dI2) const {
    const auto n = static_cast<std::size_t>(params_.n);
    double upper = 0.0;
    double lower = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const bool on_upper = gates[i] != 0;
        const bool on_lower = gates[n + i] != 0;
        vc_rate[i] = on_upper ? I1 * inverse_capacitance_[i] : 0.0;
        vc_rate[n + i] = on_lower ? -I2 * inverse_capacitance_[n + i] : 0.0;
        if (on_upper) upper += vc[i];
        if (on_lower) lower += vc[n + i];
    }
    const auto rates =
        arms_.current_rates(I1, I2, params_.Vdc - upper, -params_.Vdc + lower, Va);
    dI1 = rates[0];
    dI2 = rates[1];
}

FullState FullModel::derivative(const FullState& state, const SwitchCommand& cmd,
                                double Va) const {
    if (state.vc.size() != static_cast<std::size_t>(params_.cell_count())) {
        throw InvalidInput("state has " + std::to_string(state.vc.size()) +
                           " capacitor voltages, expected " +
                           std::to_string(params_.cell_count()));
    }
    cmd.validate(params_.n);
    FullState rate;
    rate.vc.resize(state.vc.size());
    derivative_into(state.vc, state.I1, state.I2, cmd.gates, Va, rate.vc, rate.I1, rate.I2);
    return rate;
}

double FullModel::stored_energy(const FullState& state) const {
    double energy = 0.0;
    for (std::size_t i = 0; i < state.vc.size(); ++i) {
        energy += 0.5 * state.vc[i] * state.vc[i] / inverse_capacitance_[i];
    }
    const auto flux = arms_.inductance() * std::array<double, 2>{state.I1, state.I2};
    return energy + 0.5 * (state.I1 * flux[0] + state.I2 * flux[1]);
}

FullState full_model_derivative(const ConverterParams& params, const FullState& state,
                                const SwitchCommand& cmd, double Va) {
    return FullModel(params).derivative(state, cmd, Va);
}

AverageState average_model_derivative(const ConverterParams& params, const AverageState& state,
                                      int n1, int n2, double Va) {
    if (n1 < 0 || n1 > params.n || n2 < 0 || n2 > params.n) {
        throw InvalidInput("insertion counts (" + std::to_string(n1) + ", " + std::to_string(n2) +
                           ") outside [0, " + std::to_string(params.n) + "]");
    }
    const double CT = params.total_capacitance();
    const auto v = level_voltages(params, n1, n2, state.Vc1bar, state.Vc2bar);
    const auto rates = ArmInductance(params).current_rates(state.I1, state.I2, v.V1, v.V2, Va);
    return {n1 * state.I1 / CT, -n2 * state.I2 / CT, rates[0], rates[1]};
}

TransformedCurrents sum_diff_transform(double I1, double I2) { return {I1 + I2, I1 - I2}; }

std::array<double, 2> inverse_transform(double Is, double Id) {
    return {0.5 * (Is + Id), 0.5 * (Is - Id)};
}

TransformedSignals transform_signals(double I1, double I2, double V1, double V2) {
    return {I1 + I2, I1 - I2, V1 + V2, V1 - V2};
}

Mat2 sum_diff_matrix() { return Mat2{{0.5, 0.5, 0.5, -0.5}}; }

CongruentPair congruent_transform(const ConverterParams& params) {
    const ArmInductance arms(params);
    const Mat2 Tw = sum_diff_matrix();
    const Mat2 TwT = Tw.transposed();
    return {TwT * arms.inductance() * Tw, TwT * arms.resistance() * Tw};
}

DecoupledRates decoupled_dynamics(const ConverterParams& params, double Is, double Id, double Vs,
                                  double Vd, double Va) {
    return {(-params.total_resistance() * Is - 2.0 * Va + Vs) / params.total_inductance(),
            (-params.R * Id + Vd) / params.L};
}

SquaredVoltageRates squared_voltage_dynamics(const ConverterParams& params, double Vd, double Id,
                                             double Ia_des, double f) {
    const double twoVdc = 2.0 * params.Vdc;
    const double P1 = twoVdc * Id - Vd * Id - f * Ia_des;
    const double P2 = twoVdc * Ia_des - Vd * Ia_des - f * Id;
    const double twoCT = 2.0 * params.total_capacitance();
    return {(P1 + P2) / twoCT, (P1 - P2) / twoCT, P1, P2};
}

ArmMeanRates transformed_mean_rates(const ConverterParams& params, double Vc1bar, double Vc2bar,
                                    double Vs, double Vd, double Is, double Id) {
    const double fourCT = 4.0 * params.total_capacitance();
    const double twoVdc = 2.0 * params.Vdc;
    return {(twoVdc - Vs - Vd) * (Is + Id) / (fourCT * Vc1bar),
            -(twoVdc + Vs - Vd) * (Is - Id) / (fourCT * Vc2bar)};
}

}  // namespace mmc
