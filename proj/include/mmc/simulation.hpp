#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mmc/controller.hpp"
#include "mmc/model.hpp"
#include "mmc/params.hpp"

namespace mmc {

enum class IntegrationMethod {
    Rk4InnerStep,  ///< classical RK4 at Ts / substeps
    EulerTs,       ///< one forward-Euler step per control period
};

struct Scenario {
    ConverterParams params;
    ControllerGains gains;
    ReferenceSchedule schedule;
    double duration = 3.5;
    FullState initial;
    ReferenceSetting reference;
    IntegrationMethod integrator = IntegrationMethod::Rk4InnerStep;
    int substeps = 10;
    std::uint64_t seed = 0;  // reserved; closed-loop runs are deterministic

    /// n = 8 stepped-amplitude scenario, cells at 31.25 V, zero currents.
    static Scenario closed_loop_default();
    void validate() const;
};

/// Uniformly sampled record of a run, one sample per control period.
///
/// V1, V2 and J describe the command decided at each sample and held until the next one.
/// Capacitor voltages and gates are stored sample-major (2n entries per sample).
struct Trace {
    int n = 0;
    double Ts = 0.0;
    double Vdc = 0.0;
    std::vector<double> t, I1, I2, Is, Id, V1, V2, Vc1bar, Vc2bar;
    std::vector<double> vc;
    std::vector<int> n1, n2;
    std::vector<std::uint8_t> gates;
    std::vector<double> Vc12des, Ia_des, Id_des, J;

    std::size_t size() const { return t.size(); }
    std::span<const double> capacitors(std::size_t sample) const;
    std::span<const std::uint8_t> gate_vector(std::size_t sample) const;
    void reserve(std::size_t samples);

    /// Appends one sample; reference columns may be NaN for open-loop runs.
    void append(double time, const FullState& state, const SwitchCommand& cmd,
                double vc12des, double ia_des, double id_des, double objective);
};

/// Advances the full model across one hold interval with fixed gates.
class PlantStepper {
 public:
    PlantStepper(const FullModel& model, IntegrationMethod method, int substeps);

    void advance(FullState& state, const SwitchCommand& cmd, double t0, double interval);

 private:
    void rk4_step(FullState& state, std::span<const std::uint8_t> gates, double t, double h);

    const FullModel& model_;
    IntegrationMethod method_;
    int substeps_;
    std::vector<double> k1_, k2_, k3_, k4_, stage_;
};

/// Throws SimulationDiverged when any state entry is non-finite or exceeds 1e9.
void check_divergence(const FullState& state, std::size_t step);

Trace run_closed_loop(const Scenario& scenario);

/// Plant-only run: `gates[k]` is held over [k Ts, (k+1) Ts).
Trace run_open_loop(const ConverterParams& params, std::span<const SwitchCommand> gates,
                    double duration, const FullState& initial, int substeps = 10);

/// Same trajectory as run_open_loop with the inner step refined to Ts / refinement.
Trace run_oracle(const ConverterParams& params, std::span<const SwitchCommand> gates,
                 double duration, const FullState& initial, int refinement = 100);

/// Sigma-delta level modulation of a sinusoidal sum voltage with seeded dither and random
/// cell selection, for open-loop verification runs.
std::vector<SwitchCommand> seeded_gate_sequence(const ConverterParams& params, std::size_t steps,
                                                std::uint64_t seed, double nominal_vc);

/// Averaged-model run with per-period insertion counts held over each period (RK4).
std::vector<AverageState> run_average_model(const ConverterParams& params,
                                            const AverageState& initial,
                                            std::span<const std::pair<int, int>> levels,
                                            int substeps = 10);

std::size_t step_count(double duration, double Ts);

}  // namespace mmc
