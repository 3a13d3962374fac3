#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "mmc/harmonic.hpp"
#include "mmc/model.hpp"
#include "mmc/params.hpp"

namespace mmc {

struct ControllerGains {
    double KdM = 1.5e-3;   ///< amplitude loop gain [V / V^2]
    double Kd0 = 0.10e-3;  ///< offset loop gain [V / V^2]
    double tau = 0.0318;   ///< arm-voltage filter time constant [s]
    double alpha1 = 0.99;  ///< load-current error weight
    double alpha2 = 0.01;  ///< circulating-current error weight
    int wn = 1;            ///< level window half-width

    void validate(int n) const;
};

struct AmplitudeStep {
    double start = 0.0;
    double amplitude = 0.0;
};

/// Piecewise-constant amplitude of the desired load current IaM(t) sin(omega t).
struct ReferenceSchedule {
    std::vector<AmplitudeStep> steps;
    double omega = 0.0;

    /// 1.5 A from t = 0, 9 A from 1.5 s (a current zero crossing), 0.75 A from 2.505 s (a
    /// current peak, where the fundamental arm-difference ripple crosses its mean).
    static ReferenceSchedule stepped_default(double omega);
    static ReferenceSchedule constant(double amplitude, double omega);

    double amplitude_at(double t) const;
    double max_amplitude() const;
    double load_current(double t) const { return amplitude_at(t) * std::sin(omega * t); }
    void validate() const;
};

enum class Arm { Upper = 1, Lower = 2 };

/// Gate vector for one arm with exactly `count` inserted cells. Cells that the arm current
/// will charge are taken lowest-voltage first, cells it will discharge highest first. Equal
/// voltages keep index order.
std::vector<std::uint8_t> balance_arm(Arm arm, double current, std::span<const double> vc,
                                      int count);

/// One step of the exactly discretized first-order low-pass.
double low_pass_step(double y, double u, double Ts, double tau);

/// Desired circulating current Id0 + IdM sin(omega t + alphaVd - alphaLR); IdM may be signed.
struct CirculatingSpec {
    double Id0 = 0.0;
    double IdM = 0.0;
    double alphaVd = 0.0;
    double alphaLR = 0.0;
    double omega = 0.0;

    double current(double t) const;
    double current_rate(double t) const;
    /// Voltage that keeps Id on this profile: L dId/dt + R Id as a sinusoid.
    Sinusoid voltage(const ConverterParams& params) const;
};

struct ControllerState {
    double Vc1f = 0.0;
    double Vc2f = 0.0;
    int n1prev = 0;
    int n2prev = 0;
    double Vc12des = 0.0;
    double IaM = 0.0;
    double VdM = 0.0;
    double Vd0 = 0.0;
    double Vd0minus = 0.0;
    double gamma = 0.0;
    CirculatingSpec Id;
    double lastUpdate = 0.0;
    bool initialized = false;
};

void update_filters(ControllerState& state, double Vc1bar, double Vc2bar, double Ts, double tau);

struct AmplitudeLoop {
    double VdM = 0.0;
    double IdM = 0.0;
};

/// VdM = KdM (Vc1f^2 - Vc2f^2), IdM = VdM / |R + jwL|.
AmplitudeLoop loop1_IdM(const ControllerGains& gains, double Vc1f, double Vc2f,
                        const ConverterParams& params);

struct OffsetLoop {
    double Vd0 = 0.0;
    double Id0 = 0.0;
    double Vc12mis = 0.0;
};

/// Vd0 = Vd0minus + Kd0 (Vc12des^2 - Vc12mis^2), Id0 = Vd0 / R.
OffsetLoop loop2_Id0(const ControllerGains& gains, double Vc12des, double Vc1f, double Vc2f,
                     double Vd0minus, const ConverterParams& params);

struct CirculatingTarget {
    double Id = 0.0;
    double Vd = 0.0;
};

CirculatingTarget desired_Id(const CirculatingSpec& spec, double t, const ConverterParams& params);

/// Smallest mean cell voltage that still lets the lower arm reach the peak of the desired
/// arm voltages: (V12M + Vdc) / n, maxima taken over 2048 samples per period.
double optimal_reference(const ConverterParams& params, const Sinusoid& f,
                         const Sinusoid& Vd_desired);

struct PlantSample {
    double I1 = 0.0;
    double I2 = 0.0;
    double Vc1bar = 0.0;
    double Vc2bar = 0.0;
};

struct PredictedErrors {
    double eIa = 0.0;
    double eId = 0.0;
    double Is = 0.0;
    double Id = 0.0;
};

/// Forward-Euler one-period prediction for levels (n1, n2); errors are desired minus
/// predicted.
PredictedErrors predict_errors(const ConverterParams& params, const ArmInductance& arms,
                               const PlantSample& sample, double Va, double Ia_next,
                               double Id_next, int n1, int n2);

struct LevelChoice {
    int n1 = 0;
    int n2 = 0;
    double J = 0.0;
    PredictedErrors errors;
};

double objective(const ControllerGains& gains, const PredictedErrors& e);

/// Tie-break order for equal objectives: switching effort, then n1, then n2.
bool preferred(const LevelChoice& candidate, const LevelChoice& incumbent, int n1prev,
               int n2prev);

struct PredictionContext {
    const ConverterParams& params;
    const ArmInductance& arms;
    PlantSample sample;
    double Va = 0.0;
    double Ia_next = 0.0;
    double Id_next = 0.0;
};

/// Minimizes alpha1 |eIa| + alpha2 |eId| over the window around the previous levels,
/// clamped to [0, n].
LevelChoice select_levels(const ControllerGains& gains, const PredictionContext& ctx, int n1prev,
                          int n2prev);

enum class ReferenceMode { Optimal, Constant };

struct ReferenceSetting {
    ReferenceMode mode = ReferenceMode::Optimal;
    /// Constant mode only; NaN selects the optimal value at the schedule's largest amplitude.
    double value = std::numeric_limits<double>::quiet_NaN();
};

/// Constant reference used when ReferenceSetting::value is NaN.
double worst_case_reference(const ConverterParams& params, const ReferenceSchedule& schedule);

struct ControlOutput {
    SwitchCommand command;
    LevelChoice choice;
    double Vc12des = 0.0;
    double IaM = 0.0;
    double Ia_des = 0.0;  ///< at the sampling instant
    double Id_des = 0.0;  ///< at the sampling instant
};

/// Full control chain run once per period: filters, amplitude and offset loops, circulating
/// reference, level selection, cell balancing.
class Controller {
 public:
    Controller(ConverterParams params, ControllerGains gains, ReferenceSchedule schedule,
               ReferenceSetting reference = {});

    ControlOutput step(double t, const FullState& measured);

    const ControllerState& state() const { return state_; }
    const ConverterParams& params() const { return params_; }
    const ControllerGains& gains() const { return gains_; }

 private:
    void initialize(const FullState& measured);
    void refresh_reference(double IaM);

    ConverterParams params_;
    ControllerGains gains_;
    ReferenceSchedule schedule_;
    ReferenceSetting reference_;
    ArmInductance arms_;
    ControllerState state_;
};

}  // namespace mmc
