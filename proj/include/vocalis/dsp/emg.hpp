#pragma once

#include "vocalis/dsp/filters.hpp"
#include "vocalis/dsp/spectral.hpp"
#include "vocalis/error.hpp"
#include "vocalis/signal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace vocalis::dsp {

struct StabilityScore {
    double s_db = 0.0;
    std::size_t n_terms = 0;
};

// Mean absolute level change between consecutive envelope samples, in dB:
//   s = 1/(N-1) * sum |20 log10(max(A[t+1], eps) / max(A[t], eps))|
// Lower is steadier.
inline StabilityScore stability(std::span<const double> envelope, double epsilon = 1e-12) {
    require(envelope.size() >= 2, ErrorKind::invalid_argument, "stability needs at least 2 envelope samples");
    require(epsilon > 0.0, ErrorKind::invalid_argument, "stability epsilon must be positive");
    double sum = 0.0;
    for (std::size_t t = 0; t + 1 < envelope.size(); ++t) {
        const double a = std::max(envelope[t], epsilon);
        const double b = std::max(envelope[t + 1], epsilon);
        sum += std::abs(20.0 * std::log10(b / a));
    }
    const auto terms = envelope.size() - 1;
    return {sum / static_cast<double>(terms), terms};
}

inline StabilityScore stability(const Envelope& envelope, double epsilon = 1e-12) {
    return stability(envelope.values, epsilon);
}

struct EnvelopeOptions {
    double smoothing_ms = 10.0;
    double trim_fraction = 0.05;
    double epsilon = 1e-12;
};

struct ChannelStability {
    std::vector<double> per_channel_db;
    std::vector<double> per_channel_envelope_mean;
    double mean_db = 0.0;
    double envelope_mean = 0.0;
    std::size_t n_terms = 0;
};

// Moving-average denoise, Hilbert envelope and stability for every channel,
// then the arithmetic mean across channels.
inline ChannelStability emg_stability(const SampledSignal& emg, const EnvelopeOptions& opts = {}) {
    require(!emg.empty(), ErrorKind::invalid_argument, "stability of an empty signal");
    const auto smoothed = moving_average(emg, opts.smoothing_ms);
    ChannelStability out;
    for (std::size_t c = 0; c < smoothed.channel_count(); ++c) {
        const auto env = hilbert_envelope(smoothed.channel(c), smoothed.rate_hz(), opts.trim_fraction);
        const auto score = stability(env, opts.epsilon);
        out.per_channel_db.push_back(score.s_db);
        out.per_channel_envelope_mean.push_back(
            std::accumulate(env.values.begin(), env.values.end(), 0.0) / static_cast<double>(env.values.size()));
        out.n_terms = score.n_terms;
    }
    const auto channels = static_cast<double>(out.per_channel_db.size());
    out.mean_db = std::accumulate(out.per_channel_db.begin(), out.per_channel_db.end(), 0.0) / channels;
    out.envelope_mean =
        std::accumulate(out.per_channel_envelope_mean.begin(), out.per_channel_envelope_mean.end(), 0.0) / channels;
    return out;
}

struct MvcCalibration {
    double mvc_amplitude = 0.0;
    double baseline_noise = 0.0;
    double window_s = 35.0;
    double sustain_s = 3.0;
    double rest_s = 5.0;
    bool rest_detected = true;
};

struct MvcProtocol {
    double window_s = 35.0;
    double sustain_s = 3.0;
    double rest_s = 5.0;
    double envelope_ms = 100.0;     // rectified moving-average length
    double rest_threshold = 0.10;   // fraction of the running maximum
};

namespace detail {

inline double median(std::vector<double> v) {
    const auto mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        m = (m + *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid))) / 2.0;
    }
    return m;
}

// Linear-interpolated percentile, p in [0, 100].
inline double percentile(std::vector<double> v, double p) {
    std::sort(v.begin(), v.end());
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace detail

// Envelope: rectify, moving-average, average across channels. The MVC is the
// envelope maximum over the first window_s seconds; the baseline is the
// median envelope over rest intervals, i.e. runs below rest_threshold of the
// running maximum lasting at least rest_s / 2.
inline MvcCalibration mvc_from_calibration(const SampledSignal& signal, const MvcProtocol& protocol = {}) {
    require(!signal.empty(), ErrorKind::invalid_argument, "calibration signal is empty");
    const auto window = static_cast<std::size_t>(std::llround(protocol.window_s * signal.rate_hz()));
    require(signal.length() + 1 >= window, ErrorKind::invalid_argument,
            "calibration signal shorter than the calibration window");
    const auto cal = signal.slice(0, window);

    const auto ma_len = std::max<std::size_t>(1, samples_for_ms(protocol.envelope_ms, cal.rate_hz()));
    std::vector<double> envelope(cal.length(), 0.0);
    for (std::size_t c = 0; c < cal.channel_count(); ++c) {
        std::vector<double> rect(cal.channel(c).begin(), cal.channel(c).end());
        for (double& v : rect) v = std::abs(v);
        const auto smooth = moving_average(rect, std::min(ma_len, rect.size()));
        for (std::size_t i = 0; i < envelope.size(); ++i) envelope[i] += smooth[i];
    }
    for (double& v : envelope) v /= static_cast<double>(cal.channel_count());

    MvcCalibration out;
    out.window_s = protocol.window_s;
    out.sustain_s = protocol.sustain_s;
    out.rest_s = protocol.rest_s;
    out.mvc_amplitude = *std::max_element(envelope.begin(), envelope.end());
    require(out.mvc_amplitude > 0.0, ErrorKind::degenerate, "no contraction detected");

    const auto min_rest = static_cast<std::size_t>(std::llround(protocol.rest_s * 0.5 * cal.rate_hz()));
    std::vector<double> rest_values;
    std::vector<double> run;
    double running_max = 0.0;
    auto close_run = [&] {
        if (run.size() >= min_rest && !run.empty()) rest_values.insert(rest_values.end(), run.begin(), run.end());
        run.clear();
    };
    for (double v : envelope) {
        running_max = std::max(running_max, v);
        if (running_max > 0.0 && v < protocol.rest_threshold * running_max) {
            run.push_back(v);
        } else {
            close_run();
        }
    }
    close_run();

    if (rest_values.empty()) {
        out.rest_detected = false;
        out.baseline_noise = detail::percentile(envelope, 5.0);
    } else {
        out.baseline_noise = detail::median(std::move(rest_values));
    }
    require(out.mvc_amplitude > out.baseline_noise, ErrorKind::degenerate, "no contraction detected");
    return out;
}

struct RmsSeries {
    std::vector<double> values;                    // channel mean
    std::vector<std::vector<double>> per_channel;  // [channel][window]
    std::vector<double> times_s;                   // window centres
    double window_ms = 200.0;
    double hop_ms = 200.0;
    bool normalized = false;
};

inline double rms(std::span<const double> x) {
    require(!x.empty(), ErrorKind::invalid_argument, "RMS of an empty range");
    double sum = 0.0;
    for (double v : x) sum += v * v;
    return std::sqrt(sum / static_cast<double>(x.size()));
}

// Windowed RMS; a trailing partial window is discarded.
inline RmsSeries rms_windows(const SampledSignal& signal, double window_ms = 200.0, double hop_ms = 200.0) {
    require(!signal.empty(), ErrorKind::invalid_argument, "RMS of an empty signal");
    const auto window = samples_for_ms(window_ms, signal.rate_hz());
    const auto hop = samples_for_ms(hop_ms, signal.rate_hz());
    require(window >= 1 && hop >= 1, ErrorKind::invalid_argument, "RMS window or hop shorter than one sample");
    require(window <= signal.length(), ErrorKind::invalid_argument, "RMS window exceeds signal");
    RmsSeries out;
    out.window_ms = window_ms;
    out.hop_ms = hop_ms;
    const std::size_t count = 1 + (signal.length() - window) / hop;
    out.per_channel.assign(signal.channel_count(), {});
    for (std::size_t w = 0; w < count; ++w) {
        const std::size_t start = w * hop;
        double mean = 0.0;
        for (std::size_t c = 0; c < signal.channel_count(); ++c) {
            const double r = rms(signal.channel(c).subspan(start, window));
            out.per_channel[c].push_back(r);
            mean += r;
        }
        out.values.push_back(mean / static_cast<double>(signal.channel_count()));
        out.times_s.push_back(signal.origin_s() + (static_cast<double>(start) + static_cast<double>(window) / 2.0) /
                                                      signal.rate_hz());
    }
    return out;
}

inline double normalize_mvc(double value, const MvcCalibration& cal) {
    require(cal.mvc_amplitude > cal.baseline_noise && cal.baseline_noise >= 0.0, ErrorKind::degenerate,
            "degenerate MVC calibration");
    return std::max(0.0, (value - cal.baseline_noise) / (cal.mvc_amplitude - cal.baseline_noise));
}

inline RmsSeries normalize_mvc(RmsSeries series, const MvcCalibration& cal) {
    for (double& v : series.values) v = normalize_mvc(v, cal);
    for (auto& ch : series.per_channel) {
        for (double& v : ch) v = normalize_mvc(v, cal);
    }
    series.normalized = true;
    return series;
}

} // namespace vocalis::dsp
