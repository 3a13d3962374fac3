#pragma once

#include "mmc/params.hpp"

namespace mmc {

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

/// offset + amplitude * sin(omega t + phase), amplitude >= 0.
struct Sinusoid {
    double offset = 0.0;
    double amplitude = 0.0;
    double phase = 0.0;
    double omega = 0.0;

    double operator()(double t) const;
    /// Value as a function of the electrical angle theta = omega t.
    double at_angle(double theta) const;
    double derivative(double t) const;

    /// Builds a sinusoid from a signed amplitude, folding the sign into the phase.
    static Sinusoid from_signed(double offset, double amplitude, double phase, double omega);
};

/// Operating point of the steady-state analysis. Ia_des = IaM sin(wt),
/// Va = VaM sin(wt + alphaVa), Vd = Vd0 + VdM sin(wt + alphaVd).
struct HarmonicSpec {
    double Vd0 = 0.0;
    double VdM = 0.0;
    double alphaVd = 0.0;
    double IaM = 0.0;
    double alphaVa = 0.0;
    double VaM = 0.0;
    double omega = 0.0;

    /// Spec sharing the load-source phase, amplitude and frequency of `params`.
    static HarmonicSpec for_params(const ConverterParams& params, double IaM, double Vd0 = 0.0,
                                   double VdM = 0.0, double alphaVd = 0.0);
    void validate(const ConverterParams& params) const;
};

/// Feedforward sum voltage f(t) = L_T dIa/dt + R_T Ia + 2 Va = fM sin(wt + alphaF).
Sinusoid feedforward_f(const ConverterParams& params, double IaM, double omega, double alphaVa,
                       double VaM);

/// Steady-state circulating current under the offset-plus-sinusoid Vd of `spec`.
Sinusoid steady_state_Id(const ConverterParams& params, const HarmonicSpec& spec);

/// a1 sin(wt+al1) * a2 sin(wt+al2) = constant + second_harmonic(t).
struct SinusoidProduct {
    double constant = 0.0;
    Sinusoid second_harmonic;  // at 2 omega, zero offset

    double operator()(double t) const { return constant + second_harmonic(t); }
};

SinusoidProduct product_of_sinusoids(double a1, double alpha1, double a2, double alpha2,
                                     double omega = 1.0);

/// P1(t) = P10 + zero-mean part at w and 2w.
struct P1Decomposition {
    double P10 = 0.0;
    double Vdc = 0.0;
    double Vd0 = 0.0, VdM = 0.0, alphaVd = 0.0;
    double Id0 = 0.0, IdM = 0.0, alphaLR = 0.0;
    double fM = 0.0, alphaF = 0.0, IaM = 0.0;

    /// Oscillating part of Vd * Id.
    double F_VdId(double theta) const;
    double oscillatory(double theta) const;
    double total(double theta) const { return P10 + oscillatory(theta); }
};

P1Decomposition decompose_P1(const ConverterParams& params, const HarmonicSpec& spec,
                             const Sinusoid& f, const Sinusoid& Id);

/// P2(t) = P20 + zero-mean part at w and 2w.
struct P2Decomposition {
    double P20 = 0.0;
    double Vdc = 0.0;
    double Vd0 = 0.0, VdM = 0.0, alphaVd = 0.0;
    double Id0 = 0.0, IdM = 0.0, alphaLR = 0.0;
    double fM = 0.0, alphaF = 0.0, IaM = 0.0;

    double F2(double theta) const;  // oscillating part of Vd * Ia
    double F3(double theta) const;  // oscillating part of f * Id
    double oscillatory(double theta) const;
    double total(double theta) const { return P20 + oscillatory(theta); }
};

P2Decomposition decompose_P2(const ConverterParams& params, const HarmonicSpec& spec,
                             const Sinusoid& f, const Sinusoid& Id);

/// Offset window (Vd0minus, Vd0plus) in which P10 is positive.
struct OffsetBoundary {
    double C0 = 0.0;
    double Vd0minus = 0.0;
    double Vd0plus = 0.0;
};

/// Throws InfeasibleOperatingPoint when Vdc^2 < C0.
OffsetBoundary C0_and_Vd0minus(const ConverterParams& params, const HarmonicSpec& spec,
                               const Sinusoid& f);

/// P10 as a function of the offset: (2 Vdc Vd0 - Vd0^2 - C0) / R.
double P10_of_offset(const ConverterParams& params, double Vd0, double C0);

struct P20Form {
    double a = 0.0;
    double b = 0.0;
    double beta = 0.0;
    double gamma = 0.0;
    double P20 = 0.0;
};

/// P20 = -(VdM sqrt(a^2+b^2) / 2) cos(alphaVd + gamma).
P20Form P20_closed_form(const ConverterParams& params, const HarmonicSpec& spec,
                        const Sinusoid& f);

struct HarmonicAnalysis {
    double fM = 0.0;
    double alphaF = 0.0;
    double alphaLR = 0.0;
    double Id0 = 0.0;
    double IdM = 0.0;
    double C0 = 0.0;
    double Vd0minus = 0.0;
    double Vd0plus = 0.0;
    double P10 = 0.0;
    double P20 = 0.0;
    double a = 0.0;
    double b = 0.0;
    double gamma = 0.0;
    double beta = 0.0;
    bool feasible = true;  // false when Vdc^2 < C0; boundary fields are then NaN
};

/// Runs every step above for one operating point.
HarmonicAnalysis analyze(const ConverterParams& params, const HarmonicSpec& spec);

}  // namespace mmc
