#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mmc/simulation.hpp"

namespace mmc {

/// Half-open time window [start, end); sample indices are round(start / Ts) .. round(end / Ts).
struct TimeWindow {
    double start = 0.0;
    double end = 0.0;

    bool operator==(const TimeWindow&) const = default;
};

struct TrackingMetrics {
    double rms = 0.0;
    double max_abs = 0.0;
};

/// RMS and peak magnitude of an error sequence. Throws InvalidInput when empty.
TrackingMetrics tracking_metrics(std::span<const double> error);
/// Same for eIa = Ia_des - Is over `window`.
TrackingMetrics tracking_metrics(const Trace& trace, TimeWindow window);

struct SpectrumMetrics {
    double fundamental = 0.0;   ///< A_1
    std::optional<double> thd;  ///< empty when A_1 == 0
    double avg_spectrum = 0.0;  ///< mean of A_1 .. A_{N/2}
    std::vector<double> amplitudes;  ///< A_0 .. A_{N/2}
};

/// Single-sided amplitude spectrum of one period of samples.
SpectrumMetrics spectrum_metrics(std::span<const double> samples);
/// Spectrum of Is over `window`, which must hold exactly one fundamental period.
SpectrumMetrics spectrum_metrics(const Trace& trace, TimeWindow window, double omega);

/// Relative gap between sum(x^2)/N and sum(|X_k|^2)/N^2 over the full DFT.
double parseval_residual(std::span<const double> samples);

struct MetricReport {
    TimeWindow window;
    double rmsEIa = 0.0;
    double maxAbsEIa = 0.0;
    double fundamentalAmplitude = 0.0;
    std::optional<double> thd;
    double avgSpectrum = 0.0;

    bool operator==(const MetricReport&) const = default;
};

MetricReport metric_report(const Trace& trace, TimeWindow window, double omega);

/// One-period evaluation windows, one inside each amplitude segment of the stepped schedule.
std::vector<TimeWindow> default_windows();

/// Sample index range [first, last) covered by `window`; throws InvalidInput if it is empty
/// or runs past the trace.
std::pair<std::size_t, std::size_t> window_indices(const Trace& trace, TimeWindow window);

}  // namespace mmc
