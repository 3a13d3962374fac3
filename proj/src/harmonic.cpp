#include "mmc/harmonic.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "mmc/errors.hpp"

namespace mmc {

namespace {

constexpr double kPi = std::numbers::pi;

// Signed amplitude of `s` measured along the reference phase `phase`.
double signed_amplitude(const Sinusoid& s, double phase) {
    return s.amplitude * std::cos(s.phase - phase) >= 0.0 ? s.amplitude : -s.amplitude;
}

void require_positive_resistance(const ConverterParams& params) {
    if (!(params.R > 0.0)) {
        throw ConfigError(
            "params.R must be > 0 for the steady-state circulating current (Id0 = Vd0 / R); "
            "set a positive arm resistance");
    }
}

}  // namespace

double normalize_angle(double angle) {
    double wrapped = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
    if (wrapped <= -kPi) {
        wrapped += 2.0 * kPi;
    }
    return wrapped;
}

double Sinusoid::operator()(double t) const {
    return offset + amplitude * std::sin(omega * t + phase);
}

double Sinusoid::at_angle(double theta) const {
    return offset + amplitude * std::sin(theta + phase);
}

double Sinusoid::derivative(double t) const {
    return amplitude * omega * std::cos(omega * t + phase);
}

Sinusoid Sinusoid::from_signed(double offset, double amplitude, double phase, double omega) {
    if (amplitude < 0.0) {
        return {offset, -amplitude, normalize_angle(phase + kPi), omega};
    }
    return {offset, amplitude, normalize_angle(phase), omega};
}

HarmonicSpec HarmonicSpec::for_params(const ConverterParams& params, double IaM, double Vd0,
                                      double VdM, double alphaVd) {
    return {Vd0, VdM, alphaVd, IaM, params.alphaVa, params.VaM, params.omega};
}

void HarmonicSpec::validate(const ConverterParams& params) const {
    if (!(omega > 0.0)) {
        throw InvalidInput("harmonic spec omega must be > 0");
    }
    if (omega != params.omega) {
        std::ostringstream msg;
        msg << "harmonic spec omega " << omega << " differs from converter omega "
            << params.omega << "; a single shared frequency is required";
        throw InvalidInput(msg.str());
    }
}

Sinusoid feedforward_f(const ConverterParams& params, double IaM, double omega, double alphaVa,
                       double VaM) {
    const double Sf = params.total_inductance() * IaM * omega + 2.0 * VaM * std::sin(alphaVa);
    const double Cf = params.total_resistance() * IaM + 2.0 * VaM * std::cos(alphaVa);
    const double fM = std::hypot(Sf, Cf);
    const double alphaF = fM == 0.0 ? 0.0 : normalize_angle(std::atan2(Sf, Cf));
    return {0.0, fM, alphaF, omega};
}

Sinusoid steady_state_Id(const ConverterParams& params, const HarmonicSpec& spec) {
    require_positive_resistance(params);
    const double Z = std::hypot(params.R, params.L * spec.omega);
    const double alphaLR = std::atan(params.L * spec.omega / params.R);
    return Sinusoid::from_signed(spec.Vd0 / params.R, spec.VdM / Z, spec.alphaVd - alphaLR,
                                 spec.omega);
}

SinusoidProduct product_of_sinusoids(double a1, double alpha1, double a2, double alpha2,
                                     double omega) {
    const double half = 0.5 * a1 * a2;
    // -half cos(x) == half sin(x - pi/2)
    return {half * std::cos(alpha1 - alpha2),
            Sinusoid::from_signed(0.0, half, alpha1 + alpha2 - 0.5 * kPi, 2.0 * omega)};
}

double P1Decomposition::F_VdId(double theta) const {
    return Id0 * VdM * std::sin(theta + alphaVd) +
           Vd0 * IdM * std::sin(theta + alphaVd - alphaLR) -
           0.5 * VdM * IdM * std::cos(2.0 * theta + 2.0 * alphaVd - alphaLR);
}

double P1Decomposition::oscillatory(double theta) const {
    return 2.0 * Vdc * IdM * std::sin(theta + alphaVd - alphaLR) - F_VdId(theta) +
           0.5 * fM * IaM * std::cos(2.0 * theta + alphaF);
}

P1Decomposition decompose_P1(const ConverterParams& params, const HarmonicSpec& spec,
                             const Sinusoid& f, const Sinusoid& Id) {
    require_positive_resistance(params);
    P1Decomposition d;
    d.Vdc = params.Vdc;
    d.Vd0 = spec.Vd0;
    d.VdM = spec.VdM;
    d.alphaVd = spec.alphaVd;
    d.alphaLR = std::atan(params.L * spec.omega / params.R);
    d.Id0 = Id.offset;
    d.IdM = signed_amplitude(Id, spec.alphaVd - d.alphaLR);
    d.fM = f.amplitude;
    d.alphaF = f.phase;
    d.IaM = spec.IaM;
    d.P10 = 2.0 * d.Vdc * d.Id0 - d.Vd0 * d.Id0 - 0.5 * d.VdM * d.IdM * std::cos(d.alphaLR) -
            0.5 * d.fM * d.IaM * std::cos(d.alphaF);
    return d;
}

double P2Decomposition::F2(double theta) const {
    return Vd0 * IaM * std::sin(theta) - 0.5 * VdM * IaM * std::cos(2.0 * theta + alphaVd);
}

double P2Decomposition::F3(double theta) const {
    return Id0 * fM * std::sin(theta + alphaF) -
           0.5 * fM * IdM * std::cos(2.0 * theta + alphaF + alphaVd - alphaLR);
}

double P2Decomposition::oscillatory(double theta) const {
    return 2.0 * Vdc * IaM * std::sin(theta) - F2(theta) - F3(theta);
}

P2Decomposition decompose_P2(const ConverterParams& params, const HarmonicSpec& spec,
                             const Sinusoid& f, const Sinusoid& Id) {
    require_positive_resistance(params);
    P2Decomposition d;
    d.Vdc = params.Vdc;
    d.Vd0 = spec.Vd0;
    d.VdM = spec.VdM;
    d.alphaVd = spec.alphaVd;
    d.alphaLR = std::atan(params.L * spec.omega / params.R);
    d.Id0 = Id.offset;
    d.IdM = signed_amplitude(Id, spec.alphaVd - d.alphaLR);
    d.fM = f.amplitude;
    d.alphaF = f.phase;
    d.IaM = spec.IaM;
    d.P20 = -0.5 * d.VdM * d.IaM * std::cos(d.alphaVd) -
            0.5 * d.fM * d.IdM * std::cos(d.alphaF - d.alphaVd + d.alphaLR);
    return d;
}

OffsetBoundary C0_and_Vd0minus(const ConverterParams& params, const HarmonicSpec& spec,
                               const Sinusoid& f) {
    const double Z = std::hypot(params.R, params.L * spec.omega);
    const double alphaLR = std::atan2(params.L * spec.omega, params.R);
    OffsetBoundary out;
    out.C0 = params.R * spec.VdM * spec.VdM * std::cos(alphaLR) / (2.0 * Z) +
             0.5 * params.R * f.amplitude * spec.IaM * std::cos(f.phase);
    const double disc = params.Vdc * params.Vdc - out.C0;
    if (disc < 0.0) {
        std::ostringstream msg;
        msg << "infeasible operating point: Vdc^2 = " << params.Vdc * params.Vdc
            << " < C0 = " << out.C0 << ", no offset Vd0 makes P10 positive";
        throw InfeasibleOperatingPoint(msg.str());
    }
    const double root = std::sqrt(disc);
    // Vdc - root, rewritten to avoid cancellation when C0 << Vdc^2.
    const double denom = params.Vdc + root;
    out.Vd0minus = denom > 0.0 ? out.C0 / denom : params.Vdc - root;
    out.Vd0plus = params.Vdc + root;
    return out;
}

double P10_of_offset(const ConverterParams& params, double Vd0, double C0) {
    require_positive_resistance(params);
    return (2.0 * params.Vdc * Vd0 - Vd0 * Vd0 - C0) / params.R;
}

P20Form P20_closed_form(const ConverterParams& params, const HarmonicSpec& spec,
                        const Sinusoid& f) {
    require_positive_resistance(params);
    const double Z = std::hypot(params.R, params.L * spec.omega);
    const double alphaLR = std::atan(params.L * spec.omega / params.R);
    P20Form out;
    out.beta = normalize_angle(-f.phase - alphaLR);
    out.a = spec.IaM + f.amplitude * std::cos(out.beta) / Z;
    out.b = f.amplitude * std::sin(out.beta) / Z;
    out.gamma = std::atan2(out.b, out.a);
    out.P20 = -0.5 * spec.VdM * std::hypot(out.a, out.b) * std::cos(spec.alphaVd + out.gamma);
    return out;
}

HarmonicAnalysis analyze(const ConverterParams& params, const HarmonicSpec& spec) {
    spec.validate(params);
    const Sinusoid f = feedforward_f(params, spec.IaM, spec.omega, spec.alphaVa, spec.VaM);
    const Sinusoid Id = steady_state_Id(params, spec);
    const auto p1 = decompose_P1(params, spec, f, Id);
    const auto p2 = decompose_P2(params, spec, f, Id);
    const auto closed = P20_closed_form(params, spec, f);

    HarmonicAnalysis out;
    out.fM = f.amplitude;
    out.alphaF = f.phase;
    out.alphaLR = p1.alphaLR;
    out.Id0 = p1.Id0;
    out.IdM = p1.IdM;
    out.P10 = p1.P10;
    out.P20 = p2.P20;
    out.a = closed.a;
    out.b = closed.b;
    out.gamma = closed.gamma;
    out.beta = closed.beta;
    try {
        const auto boundary = C0_and_Vd0minus(params, spec, f);
        out.C0 = boundary.C0;
        out.Vd0minus = boundary.Vd0minus;
        out.Vd0plus = boundary.Vd0plus;
    } catch (const InfeasibleOperatingPoint&) {
        const double Z = std::hypot(params.R, params.L * spec.omega);
        out.C0 = params.R * spec.VdM * spec.VdM * std::cos(out.alphaLR) / (2.0 * Z) +
                 0.5 * params.R * f.amplitude * spec.IaM * std::cos(f.phase);
        out.Vd0minus = std::nan("");
        out.Vd0plus = std::nan("");
        out.feasible = false;
    }
    return out;
}

}  // namespace mmc
