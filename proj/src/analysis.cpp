#include "mmc/analysis.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <numbers>
#include <string>

#include "mmc/errors.hpp"

namespace mmc {

namespace {

// FFTW planning is not thread-safe; execution on a private plan is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

std::vector<std::complex<double>> real_dft(std::span<const double> samples) {
    const int N = static_cast<int>(samples.size());
    std::vector<double> in(samples.begin(), samples.end());
    std::vector<std::complex<double>> out(static_cast<std::size_t>(N / 2 + 1));
    fftw_plan plan;
    {
        std::lock_guard lock(planner_mutex());
        plan = fftw_plan_dft_r2c_1d(N, in.data(), reinterpret_cast<fftw_complex*>(out.data()),
                                    FFTW_ESTIMATE);
    }
    fftw_execute(plan);
    {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan);
    }
    return out;
}

}  // namespace

TrackingMetrics tracking_metrics(std::span<const double> error) {
    if (error.empty()) {
        throw InvalidInput("tracking metrics need at least one sample");
    }
    double sum_sq = 0.0;
    double peak = 0.0;
    for (double e : error) {
        sum_sq += e * e;
        peak = std::max(peak, std::abs(e));
    }
    return {std::sqrt(sum_sq / static_cast<double>(error.size())), peak};
}

std::pair<std::size_t, std::size_t> window_indices(const Trace& trace, TimeWindow window) {
    if (!(window.end > window.start) || window.start < 0.0) {
        throw InvalidInput("window must satisfy 0 <= start < end");
    }
    const auto first = static_cast<std::size_t>(std::llround(window.start / trace.Ts));
    const auto last = static_cast<std::size_t>(std::llround(window.end / trace.Ts));
    if (last <= first) {
        throw InvalidInput("window holds no samples");
    }
    if (last > trace.size()) {
        throw InvalidInput("window end " + std::to_string(window.end) + " s lies past the trace (" +
                           std::to_string(trace.size()) + " samples)");
    }
    return {first, last};
}

TrackingMetrics tracking_metrics(const Trace& trace, TimeWindow window) {
    const auto [first, last] = window_indices(trace, window);
    std::vector<double> error;
    error.reserve(last - first);
    for (std::size_t k = first; k < last; ++k) {
        error.push_back(trace.Ia_des[k] - trace.Is[k]);
    }
    return tracking_metrics(error);
}

SpectrumMetrics spectrum_metrics(std::span<const double> samples) {
    if (samples.size() < 4) {
        throw InvalidInput("spectrum needs at least 4 samples");
    }
    const auto N = samples.size();
    const auto X = real_dft(samples);
    SpectrumMetrics out;
    out.amplitudes.resize(N / 2 + 1);
    out.amplitudes[0] = std::abs(X[0]) / static_cast<double>(N);
    for (std::size_t k = 1; k <= N / 2; ++k) {
        out.amplitudes[k] = 2.0 * std::abs(X[k]) / static_cast<double>(N);
    }
    out.fundamental = out.amplitudes[1];
    double harmonics = 0.0;
    double total = 0.0;
    for (std::size_t k = 1; k <= N / 2; ++k) {
        total += out.amplitudes[k];
        if (k >= 2) harmonics += out.amplitudes[k] * out.amplitudes[k];
    }
    out.avg_spectrum = total / static_cast<double>(N / 2);
    if (out.fundamental > 0.0) {
        out.thd = std::sqrt(harmonics) / out.fundamental;
    }
    return out;
}

SpectrumMetrics spectrum_metrics(const Trace& trace, TimeWindow window, double omega) {
    const auto [first, last] = window_indices(trace, window);
    const auto period = static_cast<std::size_t>(
        std::llround(2.0 * std::numbers::pi / (omega * trace.Ts)));
    if (last - first != period) {
        throw InvalidInput("spectrum window must hold exactly one period (" +
                           std::to_string(period) + " samples), got " +
                           std::to_string(last - first));
    }
    return spectrum_metrics(std::span<const double>(trace.Is).subspan(first, period));
}

double parseval_residual(std::span<const double> samples) {
    if (samples.empty()) {
        throw InvalidInput("Parseval check needs samples");
    }
    const auto N = samples.size();
    const auto X = real_dft(samples);
    double time_energy = 0.0;
    for (double x : samples) time_energy += x * x;
    time_energy /= static_cast<double>(N);

    // Bins 1 .. ceil(N/2)-1 appear twice in the full spectrum; the Nyquist bin once.
    double freq_energy = std::norm(X[0]);
    for (std::size_t k = 1; k < X.size(); ++k) {
        const bool nyquist = (N % 2 == 0) && k == N / 2;
        freq_energy += (nyquist ? 1.0 : 2.0) * std::norm(X[k]);
    }
    freq_energy /= static_cast<double>(N) * static_cast<double>(N);
    const double scale = std::max(time_energy, freq_energy);
    return scale == 0.0 ? 0.0 : std::abs(time_energy - freq_energy) / scale;
}

MetricReport metric_report(const Trace& trace, TimeWindow window, double omega) {
    const auto tracking = tracking_metrics(trace, window);
    const auto spectrum = spectrum_metrics(trace, window, omega);
    MetricReport r;
    r.window = window;
    r.rmsEIa = tracking.rms;
    r.maxAbsEIa = tracking.max_abs;
    r.fundamentalAmplitude = spectrum.fundamental;
    r.thd = spectrum.thd;
    r.avgSpectrum = spectrum.avg_spectrum;
    return r;
}

std::vector<TimeWindow> default_windows() {
    return {{0.38, 0.40}, {2.14, 2.16}, {3.08, 3.10}};
}

}  // namespace mmc
