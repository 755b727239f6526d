#pragma once

#include "vocalis/error.hpp"
#include "vocalis/signal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <vector>

namespace vocalis::dsp {

// Centered moving mean per channel. Output length equals input length.
// Even windows cover [i - w/2, i + w/2 - 1]; samples outside the signal are
// mirrored about the end samples (the end sample itself is not repeated).
inline std::vector<double> moving_average(std::span<const double> x, std::size_t window) {
    require(window >= 1, ErrorKind::invalid_argument, "moving average window must be at least 1 sample");
    require(window <= x.size(), ErrorKind::invalid_argument, "window exceeds signal");
    const auto n = static_cast<std::ptrdiff_t>(x.size());
    const auto half = static_cast<std::ptrdiff_t>(window / 2);
    const auto w = static_cast<std::ptrdiff_t>(window);
    auto at = [&](std::ptrdiff_t i) {
        if (n == 1) return x[0];
        while (i < 0 || i >= n) {
            if (i < 0) i = -i;
            if (i >= n) i = 2 * (n - 1) - i;
        }
        return x[static_cast<std::size_t>(i)];
    };
    std::vector<double> out(x.size());
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::ptrdiff_t k = i - half; k < i - half + w; ++k) sum += at(k);
        out[static_cast<std::size_t>(i)] = sum / static_cast<double>(window);
    }
    return out;
}

inline SampledSignal moving_average(const SampledSignal& signal, double window_ms) {
    const auto window = samples_for_ms(window_ms, signal.rate_hz());
    require(window >= 1, ErrorKind::invalid_argument, "moving average window is shorter than one sample");
    std::vector<std::vector<double>> out;
    out.reserve(signal.channel_count());
    for (std::size_t c = 0; c < signal.channel_count(); ++c) {
        out.push_back(moving_average(signal.channel(c), window));
    }
    return SampledSignal(std::move(out), signal.rate_hz(), signal.origin_s());
}

// Normalized biquad, a0 == 1. Transposed direct form II.
struct Biquad {
    double b0 = 1, b1 = 0, b2 = 0, a1 = 0, a2 = 0;

    double dc_gain() const { return (b0 + b1 + b2) / (1.0 + a1 + a2); }
};

namespace detail {

inline Biquad rbj_lowpass(double fc, double rate, double q) {
    const double w0 = 2.0 * std::numbers::pi * fc / rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    return {(1.0 - cw) / 2.0 / a0, (1.0 - cw) / a0, (1.0 - cw) / 2.0 / a0, -2.0 * cw / a0, (1.0 - alpha) / a0};
}

inline Biquad rbj_highpass(double fc, double rate, double q) {
    const double w0 = 2.0 * std::numbers::pi * fc / rate;
    const double alpha = std::sin(w0) / (2.0 * q);
    const double cw = std::cos(w0);
    const double a0 = 1.0 + alpha;
    return {(1.0 + cw) / 2.0 / a0, -(1.0 + cw) / a0, (1.0 + cw) / 2.0 / a0, -2.0 * cw / a0, (1.0 - alpha) / a0};
}

// Runs the cascade in place. Section states start at the steady-state
// response to a constant input equal to x[0].
inline void run_cascade(std::span<const Biquad> sections, std::vector<double>& x) {
    if (x.empty()) return;
    double level = x.front();
    for (const auto& s : sections) {
        const double y_ss = s.dc_gain() * level;
        double z1 = y_ss - s.b0 * level;
        double z2 = s.b2 * level - s.a2 * y_ss;
        for (double& v : x) {
            const double in = v;
            const double y = s.b0 * in + z1;
            z1 = s.b1 * in - s.a1 * y + z2;
            z2 = s.b2 * in - s.a2 * y;
            v = y;
        }
        level = y_ss;
    }
}

} // namespace detail

// Butterworth band-pass built from a high-pass and a low-pass cascade of
// `order` poles each (order must be even).
inline std::vector<Biquad> butterworth_band(double low_hz, double high_hz, double rate_hz, int order = 4) {
    require(order >= 2 && order % 2 == 0, ErrorKind::invalid_argument, "filter order must be even and >= 2");
    require(low_hz > 0.0 && low_hz < high_hz, ErrorKind::invalid_argument, "band edges must satisfy 0 < low < high");
    require(high_hz < rate_hz / 2.0, ErrorKind::invalid_argument, "band outside Nyquist");
    std::vector<Biquad> sections;
    for (int k = 1; k <= order / 2; ++k) {
        const double q = 1.0 / (2.0 * std::cos((2.0 * k - 1.0) * std::numbers::pi / (2.0 * order)));
        sections.push_back(detail::rbj_highpass(low_hz, rate_hz, q));
        sections.push_back(detail::rbj_lowpass(high_hz, rate_hz, q));
    }
    return sections;
}

// |H(f)| of the cascade for a single pass; a forward-backward run squares it.
inline double magnitude_response(std::span<const Biquad> sections, double freq_hz, double rate_hz) {
    const std::complex<double> z = std::polar(1.0, -2.0 * std::numbers::pi * freq_hz / rate_hz);  // z^-1
    std::complex<double> h = 1.0;
    for (const auto& s : sections) {
        h *= (s.b0 + s.b1 * z + s.b2 * z * z) / (1.0 + s.a1 * z + s.a2 * z * z);
    }
    return std::abs(h);
}

// Zero-phase application: odd-extension padding, forward pass, reverse pass.
// `pad` samples of extension are used at each end (clamped to n - 1).
inline std::vector<double> filtfilt(std::span<const Biquad> sections, std::span<const double> x, std::size_t pad) {
    const auto n = x.size();
    if (n == 0) return {};
    pad = std::min(n - 1, pad);
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);

    detail::run_cascade(sections, ext);
    std::reverse(ext.begin(), ext.end());
    detail::run_cascade(sections, ext);
    std::reverse(ext.begin(), ext.end());
    return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

// Padding covers six periods of the lower edge so start-up transients of the
// high-pass sections settle before reaching the signal.
inline SampledSignal band_pass(const SampledSignal& signal, double low_hz = 500.0, double high_hz = 4000.0,
                               int order = 4) {
    const auto sections = butterworth_band(low_hz, high_hz, signal.rate_hz(), order);
    const auto pad = static_cast<std::size_t>(std::ceil(6.0 * signal.rate_hz() / low_hz));
    std::vector<std::vector<double>> out;
    for (std::size_t c = 0; c < signal.channel_count(); ++c) {
        out.push_back(filtfilt(sections, signal.channel(c), pad));
    }
    return SampledSignal(std::move(out), signal.rate_hz(), signal.origin_s());
}

} // namespace vocalis::dsp
