#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "mmc/controller.hpp"
#include "mmc/errors.hpp"
#include "mmc/harmonic.hpp"
#include "mmc/simulation.hpp"

using namespace mmc;

namespace {

using Gates = std::vector<std::uint8_t>;

// Euler prediction written out with an explicit 2x2 inverse.
PredictedErrors euler_by_hand(const ConverterParams& p, const PlantSample& s, double Va,
                              double Ia, double Id, int n1, int n2) {
    const double a = p.L + p.La, b = p.La;
    const double V1 = p.Vdc - n1 * s.Vc1bar;
    const double V2 = -p.Vdc + n2 * s.Vc2bar;
    const double r1 = -(p.R + p.Ra) * s.I1 - p.Ra * s.I2 + V1 - Va;
    const double r2 = -p.Ra * s.I1 - (p.R + p.Ra) * s.I2 + V2 - Va;
    const double det = a * a - b * b;
    const double I1 = s.I1 + p.Ts * (a * r1 - b * r2) / det;
    const double I2 = s.I2 + p.Ts * (a * r2 - b * r1) / det;
    return {Ia - (I1 + I2), Id - (I1 - I2), I1 + I2, I1 - I2};
}

}  // namespace

TEST_SUITE("controller") {

TEST_CASE("balance_arm selection") {
    std::vector<double> vc{110.0, 109.0, 111.0};
    CHECK(balance_arm(Arm::Upper, 2.0, vc, 1) == Gates{0, 1, 0});
    CHECK(balance_arm(Arm::Upper, -2.0, vc, 1) == Gates{0, 0, 1});
    CHECK(balance_arm(Arm::Lower, 2.0, vc, 1) == Gates{0, 0, 1});
    CHECK(balance_arm(Arm::Lower, -2.0, vc, 1) == Gates{0, 1, 0});
    CHECK(balance_arm(Arm::Upper, 2.0, vc, 0) == Gates{0, 0, 0});
    CHECK(balance_arm(Arm::Lower, -2.0, vc, 3) == Gates{1, 1, 1});
    // Equal voltages keep index order.
    std::vector<double> eq{5.0, 5.0, 5.0, 5.0};
    CHECK(balance_arm(Arm::Upper, 1.0, eq, 2) == Gates{1, 1, 0, 0});
    CHECK_THROWS_AS(balance_arm(Arm::Upper, 1.0, vc, 4), InvalidInput);
    CHECK_THROWS_AS(balance_arm(Arm::Upper, 1.0, vc, -1), InvalidInput);

    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> u(20.0, 40.0);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> v(8);
        for (auto& x : v) x = u(rng);
        int count = static_cast<int>(rng() % 9);
        auto g = balance_arm(trial % 2 ? Arm::Upper : Arm::Lower, u(rng) - 30.0, v, count);
        CHECK(std::count(g.begin(), g.end(), 1) == count);
    }
}

TEST_CASE("low-pass filter") {
    const double Ts = 1e-4, tau = 0.0318;
    double y = 0.0;
    const int steps = static_cast<int>(std::lround(tau / Ts));
    for (int k = 0; k < steps; ++k) y = low_pass_step(y, 1.0, Ts, tau);
    const double expect = 1.0 - std::exp(-steps * Ts / tau);
    CHECK(y == doctest::Approx(expect).epsilon(1e-12));
    CHECK(std::abs(y - 0.632) < 0.01 * 0.632);
    for (int k = 0; k < 20000; ++k) y = low_pass_step(y, 1.0, Ts, tau);
    CHECK(y == doctest::Approx(1.0).epsilon(1e-12));

    const double small = low_pass_step(2.0, 3.0, 1e-9, tau) - 2.0;
    CHECK(small == doctest::Approx(1e-9 / tau).epsilon(1e-6));

    ControllerState st;
    st.Vc1f = 30.0;
    st.Vc2f = 30.0;
    update_filters(st, 31.0, 29.0, Ts, tau);
    CHECK(st.Vc1f > 30.0);
    CHECK(st.Vc2f < 30.0);
}

TEST_CASE("amplitude loop") {
    ConverterParams p;
    ControllerGains g;
    auto eq = loop1_IdM(g, 31.0, 31.0, p);
    CHECK(eq.VdM == 0.0);
    CHECK(eq.IdM == 0.0);
    auto r = loop1_IdM(g, 32.0, 31.0, p);
    CHECK(r.VdM == doctest::Approx(0.0945).epsilon(1e-12));
    CHECK(r.IdM == doctest::Approx(0.0945 / 3.1432).epsilon(1e-4));
    CHECK(r.IdM == doctest::Approx(0.03007).epsilon(1e-3));
    CHECK(loop1_IdM(g, 31.0, 32.0, p).VdM == -r.VdM);
}

TEST_CASE("offset loop") {
    ConverterParams p;
    ControllerGains g;
    auto hold = loop2_Id0(g, 31.0, 31.0, 31.0, 0.0112, p);
    CHECK(hold.Vd0 == 0.0112);
    auto r = loop2_Id0(g, 32.0, 31.0, 31.0, 0.0112, p);
    CHECK(r.Vc12mis == 31.0);
    CHECK(r.Vd0 == doctest::Approx(0.0175).epsilon(1e-12));
    CHECK(r.Id0 == doctest::Approx(0.175).epsilon(1e-12));

    // Above the reference the offset drops below the boundary, so P10 < 0.
    auto spec = HarmonicSpec::for_params(p, 1.5);
    auto f = feedforward_f(p, 1.5, p.omega, p.alphaVa, p.VaM);
    auto b = C0_and_Vd0minus(p, spec, f);
    auto down = loop2_Id0(g, 31.0, 32.0, 32.0, b.Vd0minus, p);
    CHECK(down.Vd0 < b.Vd0minus);
    CHECK(P10_of_offset(p, down.Vd0, b.C0) < 0.0);
}

TEST_CASE("desired circulating current") {
    ConverterParams p;
    CirculatingSpec dc{2.0, 0.0, 0.0, p.arm_phase(), p.omega};
    auto t0 = desired_Id(dc, 0.013, p);
    CHECK(t0.Id == 2.0);
    CHECK(t0.Vd == doctest::Approx(p.R * 2.0));

    // Driving the Id dynamics with Vd keeps Id on the profile.
    CirculatingSpec s{0.5, 1.2, 0.7, p.arm_phase(), p.omega};
    double x = s.current(0.0);
    const double h = 1e-6;
    double t = 0.0;
    auto rate = [&](double tt, double y) { return (-p.R * y + desired_Id(s, tt, p).Vd) / p.L; };
    for (int k = 0; k < 20000; ++k) {
        double k1 = rate(t, x), k2 = rate(t + h / 2, x + h / 2 * k1);
        double k3 = rate(t + h / 2, x + h / 2 * k2), k4 = rate(t + h, x + h * k3);
        x += h / 6 * (k1 + 2 * k2 + 2 * k3 + k4);
        t += h;
    }
    CHECK(x == doctest::Approx(s.current(t)).epsilon(1e-9));

    auto v = s.voltage(p);
    CHECK(normalize_angle(v.phase - s.alphaVd) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("optimal reference") {
    ConverterParams p;
    auto f = feedforward_f(p, 1.5, p.omega, p.alphaVa, p.VaM);
    Sinusoid zero{0.0, 0.0, 0.0, p.omega};
    const double v = optimal_reference(p, f, zero);
    CHECK(v == doctest::Approx((f.amplitude / 2 + p.Vdc) / p.n).epsilon(1e-6));
    CHECK(v == doctest::Approx(37.30).epsilon(1e-3));

    double prev = 0.0;
    for (double IaM = 0.0; IaM <= 12.0; IaM += 0.25) {
        auto ff = feedforward_f(p, IaM, p.omega, p.alphaVa, p.VaM);
        double r = optimal_reference(p, ff, zero);
        CHECK(r >= prev);
        prev = r;
    }
}

TEST_CASE("prediction") {
    ConverterParams p = ConverterParams::verification_setup();
    ArmInductance arms(p);
    PlantSample s{0.3, -0.2, 110.0, 110.0};
    // n1 = 2, n2 = 1 gives V1 = 30, V2 = -140.
    auto e = predict_errors(p, arms, s, 0.0, 1.0, 0.5, 2, 1);
    auto ref = euler_by_hand(p, s, 0.0, 1.0, 0.5, 2, 1);
    CHECK(e.Is == doctest::Approx(ref.Is).epsilon(1e-12));
    CHECK(e.Id == doctest::Approx(ref.Id).epsilon(1e-12));
    CHECK(e.eIa == doctest::Approx(ref.eIa).epsilon(1e-12));
    CHECK(e.eId == doctest::Approx(ref.eId).epsilon(1e-12));

    auto q = p;
    q.Ts = 1e-15;
    auto z = predict_errors(q, ArmInductance(q), s, 0.0, 1.0, 0.5, 2, 1);
    CHECK(z.eIa == doctest::Approx(1.0 - 0.1).epsilon(1e-9));
    CHECK(z.eId == doctest::Approx(0.5 - 0.5).epsilon(1e-9));
}

TEST_CASE("level selection") {
    ConverterParams p;
    ArmInductance arms(p);
    ControllerGains g;
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> cur(-10.0, 10.0), vc(25.0, 45.0);
    for (int trial = 0; trial < 200; ++trial) {
        PredictionContext ctx{p, arms, {cur(rng), cur(rng), vc(rng), vc(rng)}, cur(rng),
                              cur(rng), cur(rng)};
        int n1p = static_cast<int>(rng() % 9), n2p = static_cast<int>(rng() % 9);

        g.wn = 0;
        auto hold = select_levels(g, ctx, n1p, n2p);
        CHECK(hold.n1 == n1p);
        CHECK(hold.n2 == n2p);

        g.wn = 1;
        g.alpha1 = 0.99;
        g.alpha2 = 0.01;
        auto base = select_levels(g, ctx, n1p, n2p);
        CHECK(std::abs(base.n1 - n1p) <= 1);
        CHECK(std::abs(base.n2 - n2p) <= 1);
        auto scaled = g;
        scaled.alpha1 *= 4.0;
        scaled.alpha2 *= 4.0;
        auto s = select_levels(scaled, ctx, n1p, n2p);
        CHECK(s.n1 == base.n1);
        CHECK(s.n2 == base.n2);

        // Zero weight on Id: the winner minimizes |eIa| alone.
        g.alpha1 = 1.0;
        g.alpha2 = 0.0;
        g.wn = p.n;
        auto only = select_levels(g, ctx, n1p, n2p);
        double best = 1e300;
        for (int a = 0; a <= p.n; ++a)
            for (int b = 0; b <= p.n; ++b)
                best = std::min(best, std::abs(predict_errors(p, arms, ctx.sample, ctx.Va,
                                                              ctx.Ia_next, ctx.Id_next, a, b)
                                                   .eIa));
        CHECK(std::abs(only.errors.eIa) == best);
    }
}

TEST_CASE("schedule") {
    const double w = 2.0 * std::numbers::pi * 50.0;
    auto s = ReferenceSchedule::stepped_default(w);
    CHECK(s.amplitude_at(0.0) == 1.5);
    CHECK(s.amplitude_at(1.4999) == 1.5);
    CHECK(s.amplitude_at(2.0) == 9.0);
    CHECK(s.amplitude_at(3.0) == 0.75);
    CHECK(s.max_amplitude() == 9.0);
    CHECK_NOTHROW(s.validate());
    ReferenceSchedule bad{{{0.0, 1.0}, {0.0, 2.0}}, w};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    ReferenceSchedule late{{{0.1, 1.0}}, w};
    CHECK_THROWS_AS(late.validate(), ConfigError);
    ReferenceSchedule neg{{{0.0, -1.0}}, w};
    CHECK_THROWS_AS(neg.validate(), ConfigError);
}

TEST_CASE("gains validation") {
    ControllerGains g;
    CHECK_NOTHROW(g.validate(8));
    g.alpha1 = 0.5;
    CHECK_THROWS_AS(g.validate(8), ConfigError);
    g = ControllerGains{};
    g.wn = 9;
    CHECK_THROWS_AS(g.validate(8), ConfigError);
    g = ControllerGains{};
    g.tau = 0.0;
    CHECK_THROWS_AS(g.validate(8), ConfigError);
}

TEST_CASE("controller refuses zero R") {
    ConverterParams p;
    p.R = 0.0;
    CHECK_THROWS_AS(Controller(p, {}, ReferenceSchedule::stepped_default(p.omega)), ConfigError);
}

TEST_CASE("loop direction on the averaged model") {
    // +1 V on the upper arm mean: VdM > 0 and the arm difference shrinks.
    ConverterParams p;
    ControllerGains g;
    Controller c(p, g, ReferenceSchedule::constant(1.5, p.omega));
    AverageState s{31.25 + 1.0, 31.25, 0.0, 0.0};
    const double d0 = s.Vc1bar - s.Vc2bar;
    double first_VdM = 0.0;
    const int steps = 6000, period = 200;
    double tail = 0.0;
    for (int k = 0; k < steps; ++k) {
        FullState meas = FullState::uniform(p.n, 0.0, s.I1, s.I2);
        std::fill(meas.vc.begin(), meas.vc.begin() + p.n, s.Vc1bar);
        std::fill(meas.vc.begin() + p.n, meas.vc.end(), s.Vc2bar);
        auto out = c.step(k * p.Ts, meas);
        if (k == 0) first_VdM = c.state().VdM;
        const double h = p.Ts / 10;
        for (int j = 0; j < 10; ++j) {
            const double t = k * p.Ts + j * h;
            auto add = [](AverageState a, const AverageState& d, double w) {
                a.Vc1bar += w * d.Vc1bar;
                a.Vc2bar += w * d.Vc2bar;
                a.I1 += w * d.I1;
                a.I2 += w * d.I2;
                return a;
            };
            auto rate = [&](const AverageState& x, double tt) {
                return average_model_derivative(p, x, out.command.n1, out.command.n2,
                                                p.load_voltage(tt));
            };
            auto k1 = rate(s, t);
            auto k2 = rate(add(s, k1, h / 2), t + h / 2);
            auto k3 = rate(add(s, k2, h / 2), t + h / 2);
            auto k4 = rate(add(s, k3, h), t + h);
            s = add(add(add(add(s, k1, h / 6), k2, h / 3), k3, h / 3), k4, h / 6);
        }
        if (k >= steps - period) tail += s.Vc1bar - s.Vc2bar;
    }
    CHECK(first_VdM > 0.0);
    // Period mean of the difference; the instantaneous value carries fundamental ripple.
    CHECK(std::abs(tail / period) < 0.5 * d0);
}

}  // TEST_SUITE
