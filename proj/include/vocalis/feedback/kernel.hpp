#pragma once

#include "vocalis/dsp/emg.hpp"
#include "vocalis/dsp/filters.hpp"
#include "vocalis/dsp/pitch.hpp"
#include "vocalis/dsp/spectral.hpp"
#include "vocalis/error.hpp"
#include "vocalis/signal.hpp"

#include <cmath>
#include <optional>
#include <span>
#include <vector>

namespace vocalis::feedback {

struct KernelConfig {
    double grid_ms = 200.0;
    double window_ms = 1000.0;  // trailing EMG span for stability_window
    double smoothing_ms = 10.0;
    double trim_fraction = 0.05;
    double epsilon = 1e-12;
    std::size_t stft_window = 2048;
    std::size_t stft_hop = 512;
    std::size_t f0_frame = 4096;
    double band_low_hz = 500.0;
    double band_high_hz = 4000.0;
    dsp::F0Options f0;

    void validate() const {
        require(grid_ms > 0.0, ErrorKind::invalid_argument, "grid_ms must be positive");
        require(window_ms >= grid_ms, ErrorKind::invalid_argument, "window_ms must be at least grid_ms");
        require(stft_hop > 0 && stft_hop <= stft_window, ErrorKind::invalid_argument, "invalid STFT hop");
    }
};

struct BinMetrics {
    std::size_t index = 0;
    double t_end_s = 0.0;
    std::optional<double> rms;        // channel-mean RMS over the bin
    std::optional<double> rms_norm;   // MVC-normalized
    std::optional<double> stability_window_db;
    std::optional<double> envelope_mean;
    std::optional<double> spr_db;
    std::optional<double> f0_hz;
};

// Last sample (exclusive) of grid bin k.
inline std::size_t bin_end_sample(std::size_t k, double grid_ms, double rate_hz) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(k + 1) * grid_ms * rate_hz / 1000.0 + 1e-9));
}

inline std::size_t bin_begin_sample(std::size_t k, double grid_ms, double rate_hz) {
    return k == 0 ? 0 : bin_end_sample(k - 1, grid_ms, rate_hz);
}

// Whole bins covered by `samples` samples.
inline std::size_t complete_bins(std::size_t samples, double grid_ms, double rate_hz) {
    auto k = static_cast<std::size_t>(std::floor(static_cast<double>(samples) * 1000.0 / (grid_ms * rate_hz)));
    while (k > 0 && bin_end_sample(k - 1, grid_ms, rate_hz) > samples) --k;
    while (bin_end_sample(k, grid_ms, rate_hz) <= samples) ++k;
    return k;
}

// Samples [offset, offset + channels[c].size()) of a multi-channel stream.
struct StreamView {
    std::span<const std::vector<double>> channels;
    std::size_t offset = 0;
    double rate_hz = 0.0;

    std::size_t end() const { return offset + (channels.empty() ? 0 : channels[0].size()); }

    std::vector<double> copy(std::size_t c, std::size_t begin, std::size_t stop) const {
        require(begin >= offset && stop <= end() && begin <= stop, ErrorKind::invalid_argument,
                "stream view does not cover the requested samples");
        const auto& ch = channels[c];
        return {ch.begin() + static_cast<std::ptrdiff_t>(begin - offset),
                ch.begin() + static_cast<std::ptrdiff_t>(stop - offset)};
    }
};

// Trailing sample counts the kernel reads, per modality.
inline std::size_t emg_context_samples(const KernelConfig& cfg, double rate_hz) {
    return samples_for_ms(cfg.window_ms, rate_hz);
}

inline std::size_t audio_context_samples(const KernelConfig& cfg, double rate_hz) {
    const auto bin = bin_end_sample(0, cfg.grid_ms, rate_hz) + 1;
    return std::max(bin + cfg.stft_window - cfg.stft_hop, cfg.f0_frame);
}

inline void emg_bin_metrics(BinMetrics& out, const StreamView& emg, const dsp::MvcCalibration* cal,
                            const KernelConfig& cfg) {
    const auto k = out.index;
    const auto begin = bin_begin_sample(k, cfg.grid_ms, emg.rate_hz);
    const auto stop = bin_end_sample(k, cfg.grid_ms, emg.rate_hz);
    const auto window = emg_context_samples(cfg, emg.rate_hz);
    const auto ctx_begin = stop > window ? stop - window : 0;

    double rms_sum = 0.0;
    std::vector<std::vector<double>> ctx;
    for (std::size_t c = 0; c < emg.channels.size(); ++c) {
        rms_sum += dsp::rms(emg.copy(c, begin, stop));
        ctx.push_back(emg.copy(c, ctx_begin, stop));
    }
    out.rms = rms_sum / static_cast<double>(emg.channels.size());
    if (cal) out.rms_norm = dsp::normalize_mvc(*out.rms, *cal);

    const SampledSignal span(std::move(ctx), emg.rate_hz);
    const auto smoothing = std::max<std::size_t>(1, samples_for_ms(cfg.smoothing_ms, emg.rate_hz));
    if (span.length() >= std::max<std::size_t>(smoothing, 8)) {
        const auto st = dsp::emg_stability(span, {cfg.smoothing_ms, cfg.trim_fraction, cfg.epsilon});
        out.stability_window_db = st.mean_db;
        out.envelope_mean = st.envelope_mean;
    }
}

inline void audio_bin_metrics(BinMetrics& out, const StreamView& audio, const KernelConfig& cfg) {
    const auto k = out.index;
    const auto begin = bin_begin_sample(k, cfg.grid_ms, audio.rate_hz);
    const auto stop = bin_end_sample(k, cfg.grid_ms, audio.rate_hz);
    const auto overlap = cfg.stft_window - cfg.stft_hop;
    const auto ctx_begin = begin > overlap ? begin - overlap : 0;
    if (stop - ctx_begin >= cfg.stft_window) {
        const auto ctx = SampledSignal::mono(audio.copy(0, ctx_begin, stop), audio.rate_hz);
        const auto filtered = dsp::band_pass(ctx, cfg.band_low_hz, cfg.band_high_hz);
        const auto spec = dsp::stft_magnitude(filtered, cfg.stft_window, cfg.stft_hop);
        dsp::SprOptions opts;
        opts.epsilon = cfg.epsilon;
        out.spr_db = dsp::spr(spec, opts).segment_db;
    }
    const auto f0_begin = stop > cfg.f0_frame ? stop - cfg.f0_frame : 0;
    const auto min_len = static_cast<std::size_t>(std::ceil(2.0 * audio.rate_hz / cfg.f0.f_min));
    if (stop - f0_begin >= min_len) {
        out.f0_hz = dsp::estimate_f0(audio.copy(0, f0_begin, stop), audio.rate_hz, cfg.f0);
    }
}

// Metrics for grid bin k from whichever modalities are present. Both the
// batch reference builder and the streaming engine go through this.
inline BinMetrics compute_bin(std::size_t k, const StreamView* emg, const StreamView* audio,
                              const dsp::MvcCalibration* cal, const KernelConfig& cfg) {
    BinMetrics out;
    out.index = k;
    out.t_end_s = static_cast<double>(k + 1) * cfg.grid_ms / 1000.0;
    if (emg && !emg->channels.empty()) emg_bin_metrics(out, *emg, cal, cfg);
    if (audio && !audio->channels.empty()) audio_bin_metrics(out, *audio, cfg);
    return out;
}

} // namespace vocalis::feedback
