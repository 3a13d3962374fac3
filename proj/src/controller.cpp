#include "mmc/controller.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "mmc/errors.hpp"

namespace mmc {

void ControllerGains::validate(int n) const {
    auto fail = [](const std::string& field, const std::string& rule) {
        throw ConfigError("gains." + field + ": " + rule);
    };
    if (!std::isfinite(KdM)) fail("KdM", "must be finite");
    if (!std::isfinite(Kd0)) fail("Kd0", "must be finite");
    if (!(tau > 0.0) || !std::isfinite(tau)) fail("tau", "must be > 0");
    if (!(alpha1 >= 0.0)) fail("alpha1", "must be >= 0");
    if (!(alpha2 >= 0.0)) fail("alpha2", "must be >= 0");
    if (std::abs(alpha1 + alpha2 - 1.0) > 1e-12) fail("alpha1", "alpha1 + alpha2 must equal 1");
    if (wn < 0 || wn > n) fail("wn", "must lie in [0, n] = [0, " + std::to_string(n) + "]");
}

ReferenceSchedule ReferenceSchedule::stepped_default(double omega) {
    return {{{0.0, 1.5}, {1.5, 9.0}, {2.505, 0.75}}, omega};
}

ReferenceSchedule ReferenceSchedule::constant(double amplitude, double omega) {
    return {{{0.0, amplitude}}, omega};
}

double ReferenceSchedule::amplitude_at(double t) const {
    auto it = std::upper_bound(steps.begin(), steps.end(), t,
                               [](double time, const AmplitudeStep& s) { return time < s.start; });
    if (it == steps.begin()) {
        return steps.empty() ? 0.0 : steps.front().amplitude;
    }
    return std::prev(it)->amplitude;
}

double ReferenceSchedule::max_amplitude() const {
    double best = 0.0;
    for (const auto& s : steps) best = std::max(best, s.amplitude);
    return best;
}

void ReferenceSchedule::validate() const {
    if (steps.empty()) {
        throw ConfigError("schedule: at least one amplitude step is required");
    }
    if (steps.front().start != 0.0) {
        throw ConfigError("schedule.start_times: first step must start at 0");
    }
    for (std::size_t i = 0; i < steps.size(); ++i) {
        if (!(steps[i].amplitude >= 0.0) || !std::isfinite(steps[i].amplitude)) {
            throw ConfigError("schedule.amplitudes: entries must be finite and >= 0");
        }
        if (i > 0 && !(steps[i].start > steps[i - 1].start)) {
            throw ConfigError("schedule.start_times: must be strictly increasing");
        }
    }
    if (!(omega > 0.0)) {
        throw ConfigError("schedule.omega: must be > 0");
    }
}

std::vector<std::uint8_t> balance_arm(Arm arm, double current, std::span<const double> vc,
                                      int count) {
    const int n = static_cast<int>(vc.size());
    if (count < 0 || count > n) {
        throw InvalidInput("insertion count " + std::to_string(count) + " outside [0, " +
                           std::to_string(n) + "]");
    }
    // Positive upper-arm current charges inserted cells, positive lower-arm current
    // discharges them.
    const bool charging = arm == Arm::Upper ? current > 0.0 : current <= 0.0;

    std::vector<std::size_t> order(vc.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (charging) {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return vc[a] < vc[b]; });
    } else {
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return vc[a] > vc[b]; });
    }
    std::vector<std::uint8_t> gates(vc.size(), 0);
    for (int k = 0; k < count; ++k) {
        gates[order[static_cast<std::size_t>(k)]] = 1;
    }
    return gates;
}

double low_pass_step(double y, double u, double Ts, double tau) {
    return y + (-std::expm1(-Ts / tau)) * (u - y);
}

void update_filters(ControllerState& state, double Vc1bar, double Vc2bar, double Ts, double tau) {
    state.Vc1f = low_pass_step(state.Vc1f, Vc1bar, Ts, tau);
    state.Vc2f = low_pass_step(state.Vc2f, Vc2bar, Ts, tau);
}

double CirculatingSpec::current(double t) const {
    return Id0 + IdM * std::sin(omega * t + alphaVd - alphaLR);
}

double CirculatingSpec::current_rate(double t) const {
    return IdM * omega * std::cos(omega * t + alphaVd - alphaLR);
}

Sinusoid CirculatingSpec::voltage(const ConverterParams& params) const {
    const double Z = std::hypot(params.R, params.L * omega);
    const double lead = std::atan2(params.L * omega, params.R);
    return Sinusoid::from_signed(params.R * Id0, IdM * Z, alphaVd - alphaLR + lead, omega);
}

AmplitudeLoop loop1_IdM(const ControllerGains& gains, double Vc1f, double Vc2f,
                        const ConverterParams& params) {
    const double VdM = gains.KdM * (Vc1f * Vc1f - Vc2f * Vc2f);
    return {VdM, VdM / params.arm_impedance()};
}

OffsetLoop loop2_Id0(const ControllerGains& gains, double Vc12des, double Vc1f, double Vc2f,
                     double Vd0minus, const ConverterParams& params) {
    if (!(params.R > 0.0)) {
        throw ConfigError("params.R must be > 0 for the offset loop");
    }
    OffsetLoop out;
    out.Vc12mis = 0.5 * (Vc1f + Vc2f);
    out.Vd0 = Vd0minus + gains.Kd0 * (Vc12des * Vc12des - out.Vc12mis * out.Vc12mis);
    out.Id0 = out.Vd0 / params.R;
    return out;
}

CirculatingTarget desired_Id(const CirculatingSpec& spec, double t,
                             const ConverterParams& params) {
    const double Id = spec.current(t);
    return {Id, params.L * spec.current_rate(t) + params.R * Id};
}

double optimal_reference(const ConverterParams& params, const Sinusoid& f,
                         const Sinusoid& Vd_desired) {
    constexpr int kSamples = 2048;
    double V1max = -std::numeric_limits<double>::infinity();
    double V2max = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < kSamples; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / kSamples;
        const double Vs = f.at_angle(theta);
        const double Vd = Vd_desired.at_angle(theta);
        V1max = std::max(V1max, 0.5 * (Vs + Vd));
        V2max = std::max(V2max, 0.5 * (Vs - Vd));
    }
    const double V12M = 0.5 * (V1max + V2max);
    return std::max(0.0, (V12M + params.Vdc) / params.n);
}

PredictedErrors predict_errors(const ConverterParams& params, const ArmInductance& arms,
                               const PlantSample& sample, double Va, double Ia_next,
                               double Id_next, int n1, int n2) {
    const auto v = level_voltages(params, n1, n2, sample.Vc1bar, sample.Vc2bar);
    const auto rate = arms.current_rates(sample.I1, sample.I2, v.V1, v.V2, Va);
    const double I1 = sample.I1 + params.Ts * rate[0];
    const double I2 = sample.I2 + params.Ts * rate[1];
    PredictedErrors e;
    e.Is = I1 + I2;
    e.Id = I1 - I2;
    e.eIa = Ia_next - e.Is;
    e.eId = Id_next - e.Id;
    return e;
}

double objective(const ControllerGains& gains, const PredictedErrors& e) {
    return gains.alpha1 * std::abs(e.eIa) + gains.alpha2 * std::abs(e.eId);
}

bool preferred(const LevelChoice& candidate, const LevelChoice& incumbent, int n1prev,
               int n2prev) {
    const int effort_c = std::abs(candidate.n1 - n1prev) + std::abs(candidate.n2 - n2prev);
    const int effort_i = std::abs(incumbent.n1 - n1prev) + std::abs(incumbent.n2 - n2prev);
    if (effort_c != effort_i) return effort_c < effort_i;
    if (candidate.n1 != incumbent.n1) return candidate.n1 < incumbent.n1;
    return candidate.n2 < incumbent.n2;
}

LevelChoice select_levels(const ControllerGains& gains, const PredictionContext& ctx, int n1prev,
                          int n2prev) {
    const int n = ctx.params.n;
    const int lo1 = std::max(0, n1prev - gains.wn);
    const int hi1 = std::min(n, n1prev + gains.wn);
    const int lo2 = std::max(0, n2prev - gains.wn);
    const int hi2 = std::min(n, n2prev + gains.wn);

    LevelChoice best;
    bool have_best = false;
    for (int n1 = lo1; n1 <= hi1; ++n1) {
        for (int n2 = lo2; n2 <= hi2; ++n2) {
            LevelChoice c;
            c.n1 = n1;
            c.n2 = n2;
            c.errors = predict_errors(ctx.params, ctx.arms, ctx.sample, ctx.Va, ctx.Ia_next,
                                      ctx.Id_next, n1, n2);
            c.J = objective(gains, c.errors);
            if (!have_best || c.J < best.J ||
                (c.J == best.J && preferred(c, best, n1prev, n2prev))) {
                best = c;
                have_best = true;
            }
        }
    }
    return best;
}

double worst_case_reference(const ConverterParams& params, const ReferenceSchedule& schedule) {
    const Sinusoid f = feedforward_f(params, schedule.max_amplitude(), params.omega,
                                     params.alphaVa, params.VaM);
    return optimal_reference(params, f, Sinusoid{0.0, 0.0, 0.0, params.omega});
}

Controller::Controller(ConverterParams params, ControllerGains gains, ReferenceSchedule schedule,
                       ReferenceSetting reference)
    : params_(std::move(params)),
      gains_(gains),
      schedule_(std::move(schedule)),
      reference_(reference),
      arms_(params_) {
    params_.validate();
    if (!(params_.R > 0.0)) {
        throw ConfigError("params.R: the controller needs R > 0 (circulating offset Vd0 / R)");
    }
    if (!params_.uniform_capacitance()) {
        throw ConfigError("params.capacitances: the controller assumes uniform cell capacitance");
    }
    gains_.validate(params_.n);
    schedule_.validate();
    if (schedule_.omega != params_.omega) {
        std::ostringstream msg;
        msg << "schedule.omega (" << schedule_.omega << ") must equal params.omega ("
            << params_.omega << ")";
        throw ConfigError(msg.str());
    }
    if (reference_.mode == ReferenceMode::Constant) {
        if (std::isnan(reference_.value)) {
            reference_.value = worst_case_reference(params_, schedule_);
        } else if (!(reference_.value >= 0.0) || !std::isfinite(reference_.value)) {
            throw ConfigError("run.reference: constant value must be finite and >= 0");
        }
    }
}

void Controller::initialize(const FullState& measured) {
    if (measured.vc.size() != static_cast<std::size_t>(params_.cell_count())) {
        throw InvalidInput("measured state has " + std::to_string(measured.vc.size()) +
                           " capacitor voltages, expected " +
                           std::to_string(params_.cell_count()));
    }
    state_ = ControllerState{};
    state_.Vc1f = measured.upper_mean();
    state_.Vc2f = measured.lower_mean();
    // Start from the levels that null both arm voltages.
    auto level = [&](double mean) {
        if (!(mean > 0.0)) return params_.n;
        return std::clamp(static_cast<int>(std::lround(params_.Vdc / mean)), 0, params_.n);
    };
    state_.n1prev = level(state_.Vc1f);
    state_.n2prev = level(state_.Vc2f);
    state_.Id.alphaLR = params_.arm_phase();
    state_.Id.omega = params_.omega;
    state_.IaM = std::numeric_limits<double>::quiet_NaN();
    state_.initialized = true;
}

void Controller::refresh_reference(double IaM) {
    if (reference_.mode == ReferenceMode::Constant) {
        state_.Vc12des = reference_.value;
        return;
    }
    const Sinusoid f = feedforward_f(params_, IaM, params_.omega, params_.alphaVa, params_.VaM);
    state_.Vc12des = optimal_reference(params_, f, state_.Id.voltage(params_));
}

ControlOutput Controller::step(double t, const FullState& measured) {
    if (!state_.initialized) {
        initialize(measured);
    }
    const double IaM = schedule_.amplitude_at(t);
    if (!(IaM == state_.IaM)) {
        refresh_reference(IaM);
        state_.IaM = IaM;
    }

    const double Vc1bar = measured.upper_mean();
    const double Vc2bar = measured.lower_mean();
    update_filters(state_, Vc1bar, Vc2bar, params_.Ts, gains_.tau);

    const auto amplitude = loop1_IdM(gains_, state_.Vc1f, state_.Vc2f, params_);
    state_.VdM = amplitude.VdM;

    const Sinusoid f = feedforward_f(params_, IaM, params_.omega, params_.alphaVa, params_.VaM);
    const auto spec = HarmonicSpec::for_params(params_, IaM, 0.0, amplitude.VdM, 0.0);
    state_.gamma = P20_closed_form(params_, spec, f).gamma;
    try {
        state_.Vd0minus = C0_and_Vd0minus(params_, spec, f).Vd0minus;
    } catch (const InfeasibleOperatingPoint&) {
        // P10 < 0 for every offset; its maximum sits at Vd0 = Vdc.
        state_.Vd0minus = params_.Vdc;
    }

    const auto offset =
        loop2_Id0(gains_, state_.Vc12des, state_.Vc1f, state_.Vc2f, state_.Vd0minus, params_);
    state_.Vd0 = offset.Vd0;
    state_.Id.Id0 = offset.Id0;
    state_.Id.IdM = amplitude.IdM;
    state_.Id.alphaVd = -state_.gamma;

    const double t_next = t + params_.Ts;
    const PredictionContext ctx{params_,
                                arms_,
                                {measured.I1, measured.I2, Vc1bar, Vc2bar},
                                params_.load_voltage(t),
                                schedule_.load_current(t_next),
                                state_.Id.current(t_next)};
    const LevelChoice choice = select_levels(gains_, ctx, state_.n1prev, state_.n2prev);
    state_.n1prev = choice.n1;
    state_.n2prev = choice.n2;
    state_.lastUpdate = t;

    std::vector<std::uint8_t> gates = balance_arm(Arm::Upper, measured.I1, measured.upper(), choice.n1);
    const auto lower = balance_arm(Arm::Lower, measured.I2, measured.lower(), choice.n2);
    gates.insert(gates.end(), lower.begin(), lower.end());

    ControlOutput out;
    out.command = SwitchCommand{std::move(gates), choice.n1, choice.n2};
    out.choice = choice;
    out.Vc12des = state_.Vc12des;
    out.IaM = IaM;
    out.Ia_des = schedule_.load_current(t);
    out.Id_des = state_.Id.current(t);
    return out;
}

}  // namespace mmc
