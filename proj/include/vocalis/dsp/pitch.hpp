#pragma once

#include "vocalis/dsp/spectral.hpp"
#include "vocalis/error.hpp"
#include "vocalis/signal.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace vocalis::dsp {

struct F0Options {
    double f_min = 60.0;
    double f_max = 1500.0;
    double min_confidence = 0.3;  // normalized autocorrelation peak
};

// Autocorrelation pitch estimate. Returns nullopt for unvoiced frames.
inline std::optional<double> estimate_f0(std::span<const double> frame, double rate_hz, const F0Options& opts = {}) {
    require(opts.f_min > 0.0 && opts.f_min < opts.f_max, ErrorKind::invalid_argument, "invalid f0 search range");
    const auto n = frame.size();
    const auto max_lag = static_cast<std::size_t>(std::ceil(rate_hz / opts.f_min));
    require(n >= 2 * max_lag, ErrorKind::invalid_argument, "f0 frame shorter than two periods of f_min");
    const auto min_lag = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(rate_hz / opts.f_max)));

    double mean = 0.0;
    for (double v : frame) mean += v;
    mean /= static_cast<double>(n);
    std::vector<double> x(n);
    double energy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = frame[i] - mean;
        energy += x[i] * x[i];
    }
    if (!(energy > 0.0)) return std::nullopt;

    std::size_t nfft = 1;
    while (nfft < 2 * n) nfft <<= 1;
    std::vector<Complex> buf(nfft, 0.0);
    for (std::size_t i = 0; i < n; ++i) buf[i] = x[i];
    auto spectrum = fft(buf);
    for (auto& c : spectrum) c = std::norm(c);
    const auto acf = ifft(spectrum);

    // prefix[i] = sum of x^2 over [0, i)
    std::vector<double> prefix(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];
    auto nac = [&](std::size_t lag) {
        const double head = prefix[n - lag];
        const double tail = prefix[n] - prefix[lag];
        const double denom = std::sqrt(head * tail);
        return denom > 0.0 ? acf[lag].real() / denom : 0.0;
    };

    std::vector<double> r(max_lag + 2, 0.0);
    for (std::size_t lag = min_lag > 0 ? min_lag - 1 : 0; lag <= max_lag + 1 && lag < n; ++lag) r[lag] = nac(lag);

    double best = -1.0;
    for (std::size_t lag = min_lag; lag <= max_lag; ++lag) best = std::max(best, r[lag]);
    if (best < opts.min_confidence) return std::nullopt;

    // First interior local maximum close to the global one avoids sub-octave picks.
    std::optional<std::size_t> pick;
    for (std::size_t lag = std::max<std::size_t>(min_lag, 1); lag <= max_lag; ++lag) {
        if (r[lag] >= 0.9 * best && r[lag] >= r[lag - 1] && r[lag] >= r[lag + 1]) {
            pick = lag;
            break;
        }
    }
    if (!pick) return std::nullopt;

    double lag = static_cast<double>(*pick);
    const double y0 = r[*pick - 1], y1 = r[*pick], y2 = r[*pick + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (denom < 0.0) lag += 0.5 * (y0 - y2) / denom;
    const double f0 = rate_hz / lag;
    if (f0 < opts.f_min || f0 > opts.f_max) return std::nullopt;
    return f0;
}

inline std::optional<double> estimate_f0(const SampledSignal& frame, const F0Options& opts = {}) {
    require(frame.channel_count() == 1, ErrorKind::invalid_argument, "f0 estimation expects a single channel");
    return estimate_f0(frame.channel(0), frame.rate_hz(), opts);
}

} // namespace vocalis::dsp
