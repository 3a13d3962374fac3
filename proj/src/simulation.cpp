#include "mmc/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include "mmc/errors.hpp"

namespace mmc {

namespace {

constexpr double kDivergenceLimit = 1e9;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

}  // namespace

Scenario Scenario::closed_loop_default() {
    Scenario s;
    s.params = ConverterParams::closed_loop_setup();
    s.schedule = ReferenceSchedule::stepped_default(s.params.omega);
    s.initial = FullState::uniform(s.params.n, 31.25);
    return s;
}

void Scenario::validate() const {
    params.validate();
    if (!(duration >= 0.0) || !std::isfinite(duration)) {
        throw ConfigError("run.duration: must be finite and >= 0");
    }
    if (initial.vc.size() != static_cast<std::size_t>(params.cell_count())) {
        throw ConfigError("run.initial_vc: needs 2n = " + std::to_string(params.cell_count()) +
                          " capacitor voltages, got " + std::to_string(initial.vc.size()));
    }
    if (!initial.finite()) {
        throw ConfigError("run.initial_vc: initial state must be finite");
    }
    if (substeps < 1) {
        throw ConfigError("run.substeps: must be >= 1");
    }
    gains.validate(params.n);
    schedule.validate();
}

std::span<const double> Trace::capacitors(std::size_t sample) const {
    const auto width = static_cast<std::size_t>(2 * n);
    return std::span<const double>(vc).subspan(sample * width, width);
}

std::span<const std::uint8_t> Trace::gate_vector(std::size_t sample) const {
    const auto width = static_cast<std::size_t>(2 * n);
    return std::span<const std::uint8_t>(gates).subspan(sample * width, width);
}

void Trace::reserve(std::size_t samples) {
    for (auto* column : {&t, &I1, &I2, &Is, &Id, &V1, &V2, &Vc1bar, &Vc2bar, &Vc12des, &Ia_des,
                         &Id_des, &J}) {
        column->reserve(samples);
    }
    n1.reserve(samples);
    n2.reserve(samples);
    vc.reserve(samples * static_cast<std::size_t>(2 * n));
    gates.reserve(samples * static_cast<std::size_t>(2 * n));
}

void Trace::append(double time, const FullState& state, const SwitchCommand& cmd,
                   double vc12des, double ia_des, double id_des, double objective) {
    const auto width = static_cast<std::size_t>(n);
    double upper = 0.0;
    double lower = 0.0;
    for (std::size_t i = 0; i < width; ++i) {
        if (cmd.gates[i]) upper += state.vc[i];
        if (cmd.gates[width + i]) lower += state.vc[width + i];
    }
    t.push_back(time);
    I1.push_back(state.I1);
    I2.push_back(state.I2);
    Is.push_back(state.I1 + state.I2);
    Id.push_back(state.I1 - state.I2);
    V1.push_back(Vdc - upper);
    V2.push_back(-Vdc + lower);
    Vc1bar.push_back(state.upper_mean());
    Vc2bar.push_back(state.lower_mean());
    vc.insert(vc.end(), state.vc.begin(), state.vc.end());
    n1.push_back(cmd.n1);
    n2.push_back(cmd.n2);
    gates.insert(gates.end(), cmd.gates.begin(), cmd.gates.end());
    Vc12des.push_back(vc12des);
    Ia_des.push_back(ia_des);
    Id_des.push_back(id_des);
    J.push_back(objective);
}

PlantStepper::PlantStepper(const FullModel& model, IntegrationMethod method, int substeps)
    : model_(model), method_(method), substeps_(substeps) {
    if (substeps_ < 1) {
        throw InvalidInput("substeps must be >= 1");
    }
    const auto width = static_cast<std::size_t>(model_.params().cell_count() + 2);
    for (auto* buf : {&k1_, &k2_, &k3_, &k4_, &stage_}) buf->resize(width);
}

void PlantStepper::rk4_step(FullState& state, std::span<const std::uint8_t> gates, double t,
                            double h) {
    const auto cells = state.vc.size();
    const auto& params = model_.params();
    // Buffers hold [vc..., I1, I2].
    auto eval = [&](std::span<const double> x, double time, std::vector<double>& out) {
        model_.derivative_into(x.first(cells), x[cells], x[cells + 1], gates,
                               params.load_voltage(time), std::span<double>(out).first(cells),
                               out[cells], out[cells + 1]);
    };
    std::vector<double>& x = stage_;
    std::vector<double> x0(cells + 2);
    std::copy(state.vc.begin(), state.vc.end(), x0.begin());
    x0[cells] = state.I1;
    x0[cells + 1] = state.I2;

    eval(x0, t, k1_);
    for (std::size_t i = 0; i < x0.size(); ++i) x[i] = x0[i] + 0.5 * h * k1_[i];
    eval(x, t + 0.5 * h, k2_);
    for (std::size_t i = 0; i < x0.size(); ++i) x[i] = x0[i] + 0.5 * h * k2_[i];
    eval(x, t + 0.5 * h, k3_);
    for (std::size_t i = 0; i < x0.size(); ++i) x[i] = x0[i] + h * k3_[i];
    eval(x, t + h, k4_);

    for (std::size_t i = 0; i < cells; ++i) {
        state.vc[i] = x0[i] + h / 6.0 * (k1_[i] + 2.0 * k2_[i] + 2.0 * k3_[i] + k4_[i]);
    }
    state.I1 = x0[cells] +
               h / 6.0 * (k1_[cells] + 2.0 * k2_[cells] + 2.0 * k3_[cells] + k4_[cells]);
    state.I2 = x0[cells + 1] + h / 6.0 * (k1_[cells + 1] + 2.0 * k2_[cells + 1] +
                                          2.0 * k3_[cells + 1] + k4_[cells + 1]);
}

void PlantStepper::advance(FullState& state, const SwitchCommand& cmd, double t0,
                           double interval) {
    if (method_ == IntegrationMethod::EulerTs) {
        const auto cells = state.vc.size();
        model_.derivative_into(state.vc, state.I1, state.I2, cmd.gates,
                               model_.params().load_voltage(t0),
                               std::span<double>(k1_).first(cells), k1_[cells], k1_[cells + 1]);
        for (std::size_t i = 0; i < cells; ++i) state.vc[i] += interval * k1_[i];
        state.I1 += interval * k1_[cells];
        state.I2 += interval * k1_[cells + 1];
        return;
    }
    const double h = interval / substeps_;
    for (int s = 0; s < substeps_; ++s) {
        rk4_step(state, cmd.gates, t0 + s * h, h);
    }
}

void check_divergence(const FullState& state, std::size_t step) {
    auto bad = [](double v) { return !std::isfinite(v) || std::abs(v) > kDivergenceLimit; };
    bool diverged = bad(state.I1) || bad(state.I2);
    for (double v : state.vc) diverged = diverged || bad(v);
    if (diverged) {
        std::ostringstream msg;
        msg << "simulation diverged at step " << step << " (a state magnitude exceeded "
            << kDivergenceLimit << " or became non-finite)";
        throw SimulationDiverged(step, msg.str());
    }
}

std::size_t step_count(double duration, double Ts) {
    return static_cast<std::size_t>(std::llround(duration / Ts));
}

Trace run_closed_loop(const Scenario& scenario) {
    scenario.validate();
    const auto& params = scenario.params;
    const FullModel model(params);
    PlantStepper stepper(model,
                         scenario.integrator,
                         scenario.integrator == IntegrationMethod::EulerTs ? 1 : scenario.substeps);
    Controller controller(params, scenario.gains, scenario.schedule, scenario.reference);

    const std::size_t steps = step_count(scenario.duration, params.Ts);
    Trace trace;
    trace.n = params.n;
    trace.Ts = params.Ts;
    trace.Vdc = params.Vdc;
    trace.reserve(steps + 1);

    FullState state = scenario.initial;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * params.Ts;
        const ControlOutput out = controller.step(t, state);
        trace.append(t, state, out.command, out.Vc12des, out.Ia_des, out.Id_des, out.choice.J);
        if (k == steps) break;
        stepper.advance(state, out.command, t, params.Ts);
        check_divergence(state, k + 1);
    }
    return trace;
}

namespace {

Trace run_plant(const ConverterParams& params, std::span<const SwitchCommand> gates,
                double duration, const FullState& initial, int substeps) {
    params.validate();
    const std::size_t steps = step_count(duration, params.Ts);
    if (gates.size() < std::max<std::size_t>(steps, 1)) {
        throw InvalidInput("gate sequence has " + std::to_string(gates.size()) +
                           " entries, run needs " + std::to_string(std::max<std::size_t>(steps, 1)));
    }
    if (initial.vc.size() != static_cast<std::size_t>(params.cell_count())) {
        throw InvalidInput("initial state must hold 2n capacitor voltages");
    }
    for (const auto& cmd : gates.first(std::max<std::size_t>(steps, 1))) cmd.validate(params.n);

    const FullModel model(params);
    PlantStepper stepper(model, IntegrationMethod::Rk4InnerStep, substeps);
    Trace trace;
    trace.n = params.n;
    trace.Ts = params.Ts;
    trace.Vdc = params.Vdc;
    trace.reserve(steps + 1);

    FullState state = initial;
    for (std::size_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * params.Ts;
        const auto& cmd = gates[std::min(k, gates.size() - 1)];
        trace.append(t, state, cmd, kNaN, kNaN, kNaN, kNaN);
        if (k == steps) break;
        stepper.advance(state, cmd, t, params.Ts);
        check_divergence(state, k + 1);
    }
    return trace;
}

}  // namespace

Trace run_open_loop(const ConverterParams& params, std::span<const SwitchCommand> gates,
                    double duration, const FullState& initial, int substeps) {
    return run_plant(params, gates, duration, initial, substeps);
}

Trace run_oracle(const ConverterParams& params, std::span<const SwitchCommand> gates,
                 double duration, const FullState& initial, int refinement) {
    if (refinement < 10) {
        throw InvalidInput("oracle refinement must be >= 10, got " + std::to_string(refinement));
    }
    return run_plant(params, gates, duration, initial, refinement);
}

std::vector<SwitchCommand> seeded_gate_sequence(const ConverterParams& params, std::size_t steps,
                                                std::uint64_t seed, double nominal_vc) {
    params.validate();
    if (!(nominal_vc > 0.0)) {
        throw InvalidInput("nominal capacitor voltage must be > 0");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);

    const int n = params.n;
    const double headroom = std::max(0.0, n * nominal_vc - params.Vdc);
    const double arm_amplitude = 0.75 * std::min(headroom, params.Vdc);
    const double phase = angle(rng);
    double acc1 = unit(rng);
    double acc2 = unit(rng);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::vector<SwitchCommand> out;
    out.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * params.Ts;
        const double half_vs = arm_amplitude * std::sin(params.omega * t + phase);
        acc1 += (params.Vdc - half_vs) / nominal_vc;
        acc2 += (params.Vdc + half_vs) / nominal_vc;
        const int n1 = std::clamp(static_cast<int>(std::lround(acc1)), 0, n);
        const int n2 = std::clamp(static_cast<int>(std::lround(acc2)), 0, n);
        acc1 -= n1;
        acc2 -= n2;

        std::vector<std::uint8_t> gates(static_cast<std::size_t>(2 * n), 0);
        for (int arm = 0; arm < 2; ++arm) {
            std::iota(order.begin(), order.end(), 0);
            std::shuffle(order.begin(), order.end(), rng);
            const int count = arm == 0 ? n1 : n2;
            for (int c = 0; c < count; ++c) {
                gates[static_cast<std::size_t>(arm * n + order[static_cast<std::size_t>(c)])] = 1;
            }
        }
        out.push_back(SwitchCommand::from_gates(std::move(gates)));
    }
    return out;
}

std::vector<AverageState> run_average_model(const ConverterParams& params,
                                            const AverageState& initial,
                                            std::span<const std::pair<int, int>> levels,
                                            int substeps) {
    params.validate();
    if (!params.uniform_capacitance()) {
        throw ConfigError("params.capacitances: the averaged model assumes uniform capacitance");
    }
    std::vector<AverageState> out;
    out.reserve(levels.size() + 1);
    out.push_back(initial);
    AverageState x = initial;
    const double h = params.Ts / substeps;
    auto axpy = [](const AverageState& a, double s, const AverageState& d) {
        return AverageState{a.Vc1bar + s * d.Vc1bar, a.Vc2bar + s * d.Vc2bar, a.I1 + s * d.I1,
                            a.I2 + s * d.I2};
    };
    for (std::size_t k = 0; k < levels.size(); ++k) {
        const auto [n1, n2] = levels[k];
        for (int s = 0; s < substeps; ++s) {
            const double t = static_cast<double>(k) * params.Ts + s * h;
            const auto d1 = average_model_derivative(params, x, n1, n2, params.load_voltage(t));
            const auto d2 = average_model_derivative(params, axpy(x, 0.5 * h, d1), n1, n2,
                                                     params.load_voltage(t + 0.5 * h));
            const auto d3 = average_model_derivative(params, axpy(x, 0.5 * h, d2), n1, n2,
                                                     params.load_voltage(t + 0.5 * h));
            const auto d4 = average_model_derivative(params, axpy(x, h, d3), n1, n2,
                                                     params.load_voltage(t + h));
            x.Vc1bar += h / 6.0 * (d1.Vc1bar + 2.0 * d2.Vc1bar + 2.0 * d3.Vc1bar + d4.Vc1bar);
            x.Vc2bar += h / 6.0 * (d1.Vc2bar + 2.0 * d2.Vc2bar + 2.0 * d3.Vc2bar + d4.Vc2bar);
            x.I1 += h / 6.0 * (d1.I1 + 2.0 * d2.I1 + 2.0 * d3.I1 + d4.I1);
            x.I2 += h / 6.0 * (d1.I2 + 2.0 * d2.I2 + 2.0 * d3.I2 + d4.I2);
        }
        out.push_back(x);
    }
    return out;
}

}  // namespace mmc
