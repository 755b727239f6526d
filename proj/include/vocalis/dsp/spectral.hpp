#pragma once

#include "vocalis/error.hpp"
#include "vocalis/signal.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

namespace vocalis::dsp {

using Complex = std::complex<double>;

inline std::vector<Complex> fft(std::span<const Complex> x) {
    Eigen::FFT<double> engine;
    std::vector<Complex> in(x.begin(), x.end());
    std::vector<Complex> out;
    engine.fwd(out, in);
    return out;
}

// Inverse transform including the 1/n scale.
inline std::vector<Complex> ifft(std::span<const Complex> x) {
    Eigen::FFT<double> engine;
    std::vector<Complex> in(x.begin(), x.end());
    std::vector<Complex> out;
    engine.inv(out, in);
    return out;
}

struct Envelope {
    std::vector<double> values;
    double source_rate_hz = 0.0;
    double trim_fraction = 0.0;
    std::size_t trimmed_per_end = 0;
};

// Magnitude of the analytic signal, built in the frequency domain over the
// whole segment, with trim_fraction of the samples dropped at each end.
inline Envelope hilbert_envelope(std::span<const double> x, double rate_hz, double trim_fraction = 0.05) {
    require(!x.empty(), ErrorKind::invalid_argument, "hilbert envelope of an empty signal");
    require(x.size() >= 8, ErrorKind::invalid_argument, "hilbert envelope needs at least 8 samples");
    require(trim_fraction >= 0.0 && trim_fraction <= 0.25, ErrorKind::invalid_argument,
            "trim fraction must be within [0, 0.25]");
    const std::size_t n = x.size();
    std::vector<Complex> buf(x.begin(), x.end());
    auto spectrum = fft(buf);
    // h: 1 at DC (and Nyquist for even n), 2 for positive frequencies, 0 for negative.
    for (std::size_t k = 1; k < n; ++k) {
        if (2 * k < n) {
            spectrum[k] *= 2.0;
        } else if (2 * k > n) {
            spectrum[k] = 0.0;
        }
    }
    const auto analytic = ifft(spectrum);
    const auto cut = static_cast<std::size_t>(std::floor(trim_fraction * static_cast<double>(n)));
    Envelope env;
    env.source_rate_hz = rate_hz;
    env.trim_fraction = trim_fraction;
    env.trimmed_per_end = cut;
    env.values.reserve(n - 2 * cut);
    for (std::size_t i = cut; i < n - cut; ++i) env.values.push_back(std::abs(analytic[i]));
    require(env.values.size() >= 2, ErrorKind::invalid_argument, "envelope shorter than 2 samples after trimming");
    return env;
}

inline Envelope hilbert_envelope(const SampledSignal& signal, double trim_fraction = 0.05) {
    require(signal.channel_count() == 1, ErrorKind::invalid_argument,
            "hilbert envelope expects a single channel; split channels first");
    return hilbert_envelope(signal.channel(0), signal.rate_hz(), trim_fraction);
}

struct Spectrogram {
    // frames x (window_size / 2 + 1) magnitudes |X(f)|.
    std::vector<std::vector<double>> magnitudes;
    std::vector<double> frame_times_s; // frame centers
    double rate_hz = 0.0;
    std::size_t window_size = 0;
    std::size_t hop = 0;

    double bin_hz() const { return rate_hz / static_cast<double>(window_size); }
    std::size_t bin_count() const { return window_size / 2 + 1; }
    std::size_t frame_count() const { return magnitudes.size(); }
};

// Symmetric Hann taper: 0.5 - 0.5 cos(2 pi n / (N - 1)).
inline std::vector<double> symmetric_hann(std::size_t size) {
    std::vector<double> w(size, 1.0);
    if (size < 2) return w;
    for (std::size_t i = 0; i < size; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(size - 1));
    }
    return w;
}

// Frames start at sample 0 and step by `hop`; trailing samples that do not
// fill a whole window are not analysed.
inline Spectrogram stft_magnitude(std::span<const double> x, double rate_hz, double origin_s = 0.0,
                                  std::size_t window_size = 2048, std::size_t hop = 512) {
    require(window_size >= 2 && hop >= 1, ErrorKind::invalid_argument, "invalid STFT geometry");
    require(x.size() >= window_size, ErrorKind::invalid_argument, "signal shorter than one STFT window");
    const auto taper = symmetric_hann(window_size);
    Spectrogram spec;
    spec.rate_hz = rate_hz;
    spec.window_size = window_size;
    spec.hop = hop;
    Eigen::FFT<double> engine;
    std::vector<double> frame(window_size);
    std::vector<Complex> out;
    const std::size_t frames = 1 + (x.size() - window_size) / hop;
    spec.magnitudes.reserve(frames);
    for (std::size_t f = 0; f < frames; ++f) {
        const std::size_t start = f * hop;
        for (std::size_t i = 0; i < window_size; ++i) frame[i] = x[start + i] * taper[i];
        engine.fwd(out, frame);
        std::vector<double> mags(spec.bin_count());
        for (std::size_t k = 0; k < mags.size(); ++k) mags[k] = std::abs(out[k]);
        spec.magnitudes.push_back(std::move(mags));
        spec.frame_times_s.push_back(origin_s + (static_cast<double>(start) + static_cast<double>(window_size) / 2.0) / rate_hz);
    }
    return spec;
}

inline Spectrogram stft_magnitude(const SampledSignal& signal, std::size_t window_size = 2048, std::size_t hop = 512) {
    require(signal.channel_count() == 1, ErrorKind::invalid_argument, "STFT expects a single channel");
    return stft_magnitude(signal.channel(0), signal.rate_hz(), signal.origin_s(), window_size, hop);
}

struct Band {
    double low_hz = 0.0;
    double high_hz = 0.0;
};

struct SprSeries {
    std::vector<double> values_db; // per frame
    std::vector<double> frame_times_s;
    double segment_db = 0.0; // from energies summed over all frames
    Band high_band{2000.0, 4000.0};
    Band low_band{500.0, 1000.0};
    double epsilon = 1e-12;
};

struct SprOptions {
    Band high_band{2000.0, 4000.0};
    Band low_band{500.0, 1000.0};
    double epsilon = 1e-12;
};

// Bins whose centre frequency lies in [low, high].
inline std::pair<std::size_t, std::size_t> band_bins(const Spectrogram& spec, Band band) {
    const double nyquist = spec.rate_hz / 2.0;
    require(band.low_hz >= 0.0 && band.low_hz <= band.high_hz && band.high_hz <= nyquist,
            ErrorKind::invalid_argument, "band outside the spectrogram frequency range");
    const double bin = spec.bin_hz();
    auto first = static_cast<std::size_t>(std::ceil(band.low_hz / bin));
    auto last = static_cast<std::size_t>(std::floor(band.high_hz / bin));
    // Guard against floor/ceil landing one bin off through rounding.
    while (first > 0 && static_cast<double>(first - 1) * bin >= band.low_hz) --first;
    while (static_cast<double>(first) * bin < band.low_hz) ++first;
    while (static_cast<double>(last + 1) * bin <= band.high_hz && last + 1 < spec.bin_count()) ++last;
    while (last > 0 && static_cast<double>(last) * bin > band.high_hz) --last;
    last = std::min(last, spec.bin_count() - 1);
    require(first <= last, ErrorKind::invalid_argument, "band has zero bins");
    return {first, last + 1};
}

inline double band_energy(std::span<const double> magnitudes, std::pair<std::size_t, std::size_t> bins) {
    double e = 0.0;
    for (std::size_t k = bins.first; k < bins.second; ++k) e += magnitudes[k] * magnitudes[k];
    return e;
}

inline SprSeries spr(const Spectrogram& spec, const SprOptions& opts = {}) {
    require(opts.epsilon > 0.0, ErrorKind::invalid_argument, "SPR epsilon must be positive");
    const auto high = band_bins(spec, opts.high_band);
    const auto low = band_bins(spec, opts.low_band);
    SprSeries out;
    out.high_band = opts.high_band;
    out.low_band = opts.low_band;
    out.epsilon = opts.epsilon;
    out.frame_times_s = spec.frame_times_s;
    double total_high = 0.0;
    double total_low = 0.0;
    for (const auto& frame : spec.magnitudes) {
        const double eh = band_energy(frame, high);
        const double el = band_energy(frame, low);
        total_high += eh;
        total_low += el;
        out.values_db.push_back(10.0 * std::log10((eh + opts.epsilon) / (el + opts.epsilon)));
    }
    out.segment_db = 10.0 * std::log10((total_high + opts.epsilon) / (total_low + opts.epsilon));
    return out;
}

} // namespace vocalis::dsp
