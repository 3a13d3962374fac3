#include <doctest.h>

#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <random>

#include "mmc/analysis.hpp"
#include "mmc/errors.hpp"

using namespace mmc;
using std::numbers::pi;

namespace {

constexpr double kOmega = 2.0 * pi * 50.0;

// Trace with only the columns the metrics read.
Trace synthetic(std::size_t samples, const std::function<double(double)>& is,
                const std::function<double(double)>& ia_des) {
    Trace tr;
    tr.n = 1;
    tr.Ts = 1e-4;
    for (std::size_t k = 0; k < samples; ++k) {
        const double t = static_cast<double>(k) * tr.Ts;
        tr.t.push_back(t);
        tr.Is.push_back(is(t));
        tr.Ia_des.push_back(ia_des(t));
    }
    return tr;
}

std::vector<double> naive_amplitudes(const std::vector<double>& x) {
    const std::size_t N = x.size();
    std::vector<double> a(N / 2 + 1);
    for (std::size_t k = 0; k <= N / 2; ++k) {
        std::complex<double> s = 0.0;
        for (std::size_t j = 0; j < N; ++j)
            s += x[j] * std::polar(1.0, -2.0 * pi * double(k * j % N) / double(N));
        a[k] = (k == 0 ? 1.0 : 2.0) * std::abs(s) / double(N);
    }
    return a;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("tracking metrics") {
    std::vector<double> zero(200, 0.0);
    auto z = tracking_metrics(zero);
    CHECK(z.rms == 0.0);
    CHECK(z.max_abs == 0.0);

    std::vector<double> e(200);
    for (std::size_t k = 0; k < e.size(); ++k) e[k] = 0.002 * std::sin(2.0 * pi * k / 200.0);
    auto m = tracking_metrics(e);
    CHECK(std::abs(m.rms - 0.002 / std::sqrt(2.0)) < 1e-12);
    CHECK(m.max_abs == doctest::Approx(0.002));
    CHECK(m.rms <= m.max_abs);

    CHECK_THROWS_AS(tracking_metrics(std::span<const double>{}), InvalidInput);
}

TEST_CASE("spectrum of a pure sinusoid") {
    auto tr = synthetic(400, [](double t) { return 1.5 * std::sin(kOmega * t + 0.3); },
                        [](double) { return 0.0; });
    auto s = spectrum_metrics(tr, {0.0, 0.02}, kOmega);
    CHECK(s.fundamental == doctest::Approx(1.5).epsilon(1e-12));
    REQUIRE(s.thd.has_value());
    CHECK(*s.thd < 1e-12);
    CHECK(s.amplitudes.size() == 101);
    CHECK(s.avg_spectrum == doctest::Approx(1.5 / 100.0).epsilon(1e-9));
}

TEST_CASE("DC-only signal has undefined THD") {
    auto tr = synthetic(200, [](double) { return 2.0; }, [](double) { return 0.0; });
    auto s = spectrum_metrics(tr, {0.0, 0.02}, kOmega);
    CHECK(s.fundamental == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(s.amplitudes[0] == doctest::Approx(2.0));
    if (s.fundamental == 0.0) CHECK_FALSE(s.thd.has_value());
    std::vector<double> dc(200, 2.0);
    CHECK_FALSE(spectrum_metrics(dc).thd.has_value());
}

TEST_CASE("spectrum matches a direct DFT") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> noise(0.0, 0.1);
    std::vector<double> x(200);
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] = 0.4 + 2.0 * std::sin(2.0 * pi * k / 200.0) + 0.3 * std::cos(6.0 * pi * k / 200.0) +
               noise(rng);
    auto s = spectrum_metrics(x);
    auto ref = naive_amplitudes(x);
    for (std::size_t k = 0; k < ref.size(); ++k)
        CHECK(s.amplitudes[k] == doctest::Approx(ref[k]).epsilon(1e-9));
    double h = 0.0;
    for (std::size_t k = 2; k < ref.size(); ++k) h += ref[k] * ref[k];
    CHECK(*s.thd == doctest::Approx(std::sqrt(h) / ref[1]).epsilon(1e-9));
}

TEST_CASE("Parseval identity") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (std::size_t N : {200u, 201u, 64u}) {
        std::vector<double> x(N);
        for (auto& v : x) v = u(rng);
        CHECK(parseval_residual(x) < 1e-9);
    }
}

TEST_CASE("window handling") {
    auto tr = synthetic(500, [](double t) { return std::sin(kOmega * t); },
                        [](double t) { return std::sin(kOmega * t); });
    auto [a, b] = window_indices(tr, {0.01, 0.03});
    CHECK(a == 100);
    CHECK(b == 300);
    CHECK_THROWS_AS(window_indices(tr, {0.03, 0.01}), InvalidInput);
    CHECK_THROWS_AS(window_indices(tr, {0.04, 0.06}), InvalidInput);
    CHECK_THROWS_AS(spectrum_metrics(tr, {0.0, 0.03}, kOmega), InvalidInput);
    auto r = metric_report(tr, {0.0, 0.02}, kOmega);
    CHECK(r.rmsEIa == 0.0);
    CHECK(r.fundamentalAmplitude == doctest::Approx(1.0));
}

TEST_CASE("metrics are invariant to whole-period shifts") {
    auto is = [](double t) {
        return 1.5 * std::sin(kOmega * t) + 0.05 * std::sin(5.0 * kOmega * t + 0.2);
    };
    auto des = [](double t) { return 1.5 * std::sin(kOmega * t); };
    auto tr = synthetic(1000, is, des);
    auto r0 = metric_report(tr, {0.0, 0.02}, kOmega);
    auto r2 = metric_report(tr, {0.04, 0.06}, kOmega);
    CHECK(r2.rmsEIa == doctest::Approx(r0.rmsEIa).epsilon(1e-9));
    CHECK(r2.maxAbsEIa == doctest::Approx(r0.maxAbsEIa).epsilon(1e-9));
    CHECK(r2.fundamentalAmplitude == doctest::Approx(r0.fundamentalAmplitude).epsilon(1e-9));
    CHECK(*r2.thd == doctest::Approx(*r0.thd).epsilon(1e-9));
    CHECK(*r0.thd == doctest::Approx(0.05 / 1.5).epsilon(1e-9));
}

TEST_CASE("default windows") {
    auto w = default_windows();
    REQUIRE(w.size() == 3);
    CHECK(w[0] == TimeWindow{0.38, 0.40});
    CHECK(w[2] == TimeWindow{3.08, 3.10});
}

}  // TEST_SUITE
