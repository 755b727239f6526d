#pragma once

#include "vocalis/feedback/frame.hpp"
#include "vocalis/feedback/kernel.hpp"
#include "vocalis/feedback/reference.hpp"
#include "vocalis/io/segment.hpp"
#include "vocalis/io/session.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace vocalis::feedback {

struct EngineConfig {
    KernelConfig kernel;
    double tick_hz = 30.0;
    dsp::MvcProtocol mvc;

    void validate() const {
        kernel.validate();
        require(tick_hz > 0.0 && std::isfinite(tick_hz), ErrorKind::invalid_argument, "tick rate must be positive");
    }
};

// One slice of live or replayed input; either modality may be absent.
struct Chunk {
    std::optional<SampledSignal> emg;
    std::optional<SampledSignal> audio;
};

// Append-only sample store that keeps only a trailing window in memory.
class StreamBuffer {
public:
    StreamBuffer() = default;
    StreamBuffer(std::string name, double rate_hz, std::size_t channels)
        : name_(std::move(name)), rate_hz_(rate_hz), data_(channels) {}

    double rate_hz() const { return rate_hz_; }
    std::size_t consumed() const { return offset_ + (data_.empty() ? 0 : data_[0].size()); }
    double duration_s() const { return static_cast<double>(consumed()) / rate_hz_; }
    StreamView view() const { return {data_, offset_, rate_hz_}; }

    // Throws when `s` cannot continue this stream.
    void check(const SampledSignal& s) const {
        if (s.rate_hz() != rate_hz_) {
            fail(ErrorKind::rate_mismatch, "rate mismatch: " + name_ + " chunk at " + io::format_double(s.rate_hz()) +
                                               " Hz, session expects " + io::format_double(rate_hz_) + " Hz");
        }
        if (s.channel_count() != data_.size()) {
            fail(ErrorKind::rate_mismatch, "channel mismatch: " + name_ + " chunk has " +
                                               std::to_string(s.channel_count()) + " channels, session expects " +
                                               std::to_string(data_.size()));
        }
        const double at = s.origin_s() * rate_hz_;
        const auto expected = static_cast<double>(consumed());
        if (at < expected - 0.5) {
            fail(ErrorKind::time_order, "time regression: " + name_ + " chunk starts at " +
                                            io::format_double(s.origin_s()) + " s, stream is at " +
                                            io::format_double(duration_s()) + " s");
        }
        if (at > expected + 0.5) {
            fail(ErrorKind::time_order, "gap in " + name_ + " stream: chunk starts at " + io::format_double(s.origin_s()) +
                                            " s, stream is at " + io::format_double(duration_s()) + " s");
        }
    }

    void append(const SampledSignal& s) {
        check(s);
        for (std::size_t c = 0; c < data_.size(); ++c) {
            data_[c].insert(data_[c].end(), s.channel(c).begin(), s.channel(c).end());
        }
    }

    // Drops samples before absolute index `keep_from` once enough have piled up.
    void trim(std::size_t keep_from) {
        if (keep_from <= offset_ || data_.empty()) return;
        const auto drop = std::min(keep_from - offset_, data_[0].size());
        if (drop < data_[0].size() / 2) return;
        for (auto& ch : data_) ch.erase(ch.begin(), ch.begin() + static_cast<std::ptrdiff_t>(drop));
        offset_ += drop;
    }

    SampledSignal contents() const { return SampledSignal(data_, rate_hz_, static_cast<double>(offset_) / rate_hz_); }

private:
    std::string name_;
    double rate_hz_ = 1.0;
    std::vector<std::vector<double>> data_;
    std::size_t offset_ = 0;
};

struct PitchSummary {
    io::PitchLabel pitch;
    double start_s = 0.0;
    double end_s = 0.0;
    std::size_t bins = 0;
    std::optional<double> stability_mean_db;
    std::optional<double> spr_delta_mean;
    std::optional<double> rms_delta_mean;
};

struct SessionSummary {
    SessionPhase phase = SessionPhase::idle;
    double duration_s = 0.0;
    std::size_t frames = 0;
    std::vector<PitchSummary> pitches;
};

inline nlohmann::json to_json(const SessionSummary& s) {
    nlohmann::json j;
    j["phase"] = std::string(to_string(s.phase));
    j["duration_s"] = s.duration_s;
    j["frames"] = s.frames;
    auto arr = nlohmann::json::array();
    for (const auto& p : s.pitches) {
        nlohmann::json e{{"pitch", p.pitch.spn}, {"midi", p.pitch.midi}, {"start_s", p.start_s}, {"end_s", p.end_s},
                         {"bins", p.bins}};
        detail::put(e, "stability_mean_db", p.stability_mean_db);
        detail::put(e, "spr_delta_mean", p.spr_delta_mean);
        detail::put(e, "rms_delta_mean", p.rms_delta_mean);
        arr.push_back(e);
    }
    j["pitches"] = arr;
    return j;
}

inline MetricValues learner_values(const BinMetrics& b) {
    return {b.envelope_mean, b.stability_window_db, b.rms_norm, b.spr_db, b.f0_hz};
}

inline MetricValues expert_values(const ReferenceBin& b) {
    return {b.envelope_mean, b.stability_window, b.rms_norm, b.spr, b.f0};
}

inline std::optional<double> difference(const std::optional<double>& a, const std::optional<double>& b) {
    if (a && b) return *a - *b;
    return std::nullopt;
}

// One training session: phase machine, incremental grid metrics and ticked frames.
class FeedbackSession {
public:
    explicit FeedbackSession(io::SessionManifest manifest, EngineConfig cfg = {})
        : manifest_(std::move(manifest)), cfg_(std::move(cfg)) {
        cfg_.validate();
        emg_active_ = manifest_.has(io::Modality::emg);
        audio_active_ = manifest_.has(io::Modality::audio);
        require(emg_active_ || audio_active_, ErrorKind::invalid_argument, "session needs EMG or audio");
        if (emg_active_) {
            require(manifest_.emg_rate_hz.has_value(), ErrorKind::invalid_argument, "manifest lacks emg_rate_hz");
        }
        if (audio_active_) {
            require(manifest_.audio_rate_hz.has_value(), ErrorKind::invalid_argument, "manifest lacks audio_rate_hz");
        }
        reset_streams();
    }

    const io::SessionManifest& manifest() const { return manifest_; }
    const EngineConfig& config() const { return cfg_; }
    SessionPhase phase() const { return phase_; }
    double clock_s() const { return clock_s_; }
    const std::optional<dsp::MvcCalibration>& calibration() const { return calibration_; }
    const std::vector<io::PitchEvent>& schedule() const { return schedule_; }
    const std::shared_ptr<const ReferenceTrace>& reference() const { return reference_; }
    const std::vector<BinMetrics>& bins() const { return bins_; }
    std::size_t frames_emitted() const { return frames_emitted_; }
    bool emg_active() const { return emg_active_; }
    bool audio_active() const { return audio_active_; }

    void start_calibration() {
        transition("start_calibration", SessionPhase::idle, SessionPhase::calibrating);
        calibration_.reset();
        const auto channels = static_cast<std::size_t>(manifest_.emg_channels.value_or(1));
        calibration_buffer_ = StreamBuffer("calibration emg", manifest_.emg_rate_hz.value_or(1.0), channels);
    }

    // `calibration` overrides the recorded calibration (e.g. a stored MVC).
    void start_practice(std::shared_ptr<const ReferenceTrace> reference, std::vector<io::PitchEvent> schedule,
                        std::optional<dsp::MvcCalibration> calibration = std::nullopt) {
        if (phase_ == SessionPhase::idle && emg_active_) {
            fail(ErrorKind::illegal_transition,
                 "illegal transition: start_practice in phase Idle requires a completed calibration while EMG is active");
        }
        require_phase("start_practice", SessionPhase::calibrating);
        if (reference) {
            require(reference->grid_ms == cfg_.kernel.grid_ms, ErrorKind::invalid_argument,
                    "reference grid differs from the session grid");
        }
        if (emg_active_) {
            if (calibration) {
                calibration_ = calibration;
            } else if (calibration_buffer_.consumed() > 0) {
                calibration_ = calibrate(calibration_buffer_.contents(), cfg_.mvc);
            } else if (manifest_.mvc) {
                calibration_ = manifest_.mvc;
            } else {
                fail(ErrorKind::illegal_transition,
                     "illegal transition: start_practice in phase Calibrating before any calibration EMG was received");
            }
        }
        reference_ = std::move(reference);
        schedule_ = std::move(schedule);
        reset_streams();
        phase_ = SessionPhase::practicing;
    }

    void end_session() { transition("end", SessionPhase::practicing, SessionPhase::review); }

    void reset() {
        transition("reset", SessionPhase::review, SessionPhase::idle);
        calibration_.reset();
        reference_.reset();
        schedule_.clear();
        reset_streams();
    }

    // Chunks outside Calibrating/Practicing are ignored.
    std::vector<FeedbackFrame> process_chunk(const Chunk& chunk) {
        if (chunk.emg) require(emg_active_, ErrorKind::invalid_argument, "EMG chunk for a session without EMG");
        if (chunk.audio) require(audio_active_, ErrorKind::invalid_argument, "audio chunk for a session without audio");
        if (phase_ == SessionPhase::calibrating) {
            if (chunk.emg) calibration_buffer_.append(*chunk.emg);
            return {};
        }
        if (phase_ != SessionPhase::practicing) return {};
        if (chunk.emg) emg_.check(*chunk.emg);
        if (chunk.audio) audio_.check(*chunk.audio);
        if (chunk.emg) emg_.append(*chunk.emg);
        if (chunk.audio) audio_.append(*chunk.audio);
        advance_bins();
        clock_s_ = stream_clock();
        std::vector<FeedbackFrame> frames;
        while (true) {
            const double t = static_cast<double>(next_tick_) / cfg_.tick_hz;
            if (t > clock_s_ + 1e-9) break;
            frames.push_back(frame_at(t));
            ++next_tick_;
        }
        frames_emitted_ += frames.size();
        return frames;
    }

    SessionSummary summary() const {
        SessionSummary out;
        out.phase = phase_;
        out.duration_s = clock_s_;
        out.frames = frames_emitted_;
        for (const auto& ev : schedule_) {
            PitchSummary p{ev.label, ev.start_s, ev.end_s, 0, {}, {}, {}};
            double st = 0.0, spr = 0.0, rms = 0.0;
            std::size_t n_st = 0, n_spr = 0, n_rms = 0;
            for (const auto& b : bins_) {
                const double mid = b.t_end_s - cfg_.kernel.grid_ms / 2000.0;
                if (mid < ev.start_s || mid >= ev.end_s) continue;
                ++p.bins;
                if (b.stability_window_db) {
                    st += *b.stability_window_db;
                    ++n_st;
                }
                const auto* ref = reference_ ? reference_->at(b.index) : nullptr;
                if (!ref) continue;
                if (const auto d = difference(b.spr_db, ref->spr)) {
                    spr += *d;
                    ++n_spr;
                }
                if (const auto d = difference(b.rms_norm, ref->rms_norm)) {
                    rms += *d;
                    ++n_rms;
                }
            }
            if (n_st) p.stability_mean_db = st / static_cast<double>(n_st);
            if (n_spr) p.spr_delta_mean = spr / static_cast<double>(n_spr);
            if (n_rms) p.rms_delta_mean = rms / static_cast<double>(n_rms);
            out.pitches.push_back(p);
        }
        return out;
    }

private:
    void require_phase(const char* op, SessionPhase from) const {
        if (phase_ != from) {
            fail(ErrorKind::illegal_transition,
                 std::string("illegal transition: ") + op + " in phase " + std::string(to_string(phase_)));
        }
    }

    void transition(const char* op, SessionPhase from, SessionPhase to) {
        require_phase(op, from);
        phase_ = to;
    }

    void reset_streams() {
        if (emg_active_) {
            emg_ = StreamBuffer("emg", *manifest_.emg_rate_hz, static_cast<std::size_t>(manifest_.emg_channels.value_or(1)));
        }
        if (audio_active_) audio_ = StreamBuffer("audio", *manifest_.audio_rate_hz, 1);
        bins_.clear();
        next_tick_ = 1;
        clock_s_ = 0.0;
        frames_emitted_ = 0;
    }

    double stream_clock() const {
        double c = INFINITY;
        if (emg_active_) c = std::min(c, emg_.duration_s());
        if (audio_active_) c = std::min(c, audio_.duration_s());
        return c;
    }

    void advance_bins() {
        const auto& k = cfg_.kernel;
        std::size_t available = SIZE_MAX;
        if (emg_active_) available = std::min(available, complete_bins(emg_.consumed(), k.grid_ms, emg_.rate_hz()));
        if (audio_active_) available = std::min(available, complete_bins(audio_.consumed(), k.grid_ms, audio_.rate_hz()));
        const auto* cal = calibration_ ? &*calibration_ : nullptr;
        while (bins_.size() < available) {
            const auto ev = emg_active_ ? std::optional<StreamView>(emg_.view()) : std::nullopt;
            const auto av = audio_active_ ? std::optional<StreamView>(audio_.view()) : std::nullopt;
            bins_.push_back(compute_bin(bins_.size(), ev ? &*ev : nullptr, av ? &*av : nullptr, cal, k));
        }
        const auto next = bins_.size();
        if (emg_active_) {
            const auto end = bin_end_sample(next, k.grid_ms, emg_.rate_hz());
            const auto ctx = emg_context_samples(k, emg_.rate_hz());
            emg_.trim(end > ctx ? end - ctx : 0);
        }
        if (audio_active_) {
            const auto begin = bin_begin_sample(next, k.grid_ms, audio_.rate_hz());
            const auto end = bin_end_sample(next, k.grid_ms, audio_.rate_hz());
            const auto overlap = k.stft_window - k.stft_hop;
            const auto from = std::min(begin > overlap ? begin - overlap : 0, end > k.f0_frame ? end - k.f0_frame : 0);
            audio_.trim(from);
        }
    }

    FeedbackFrame frame_at(double t) const {
        FeedbackFrame f;
        f.t_s = t;
        f.phase = phase_;
        const auto* ev = io::event_at(schedule_, t);
        if (ev) f.target_pitch = ev->label;
        const auto done = static_cast<std::size_t>(std::floor(t * 1000.0 / cfg_.kernel.grid_ms + 1e-9));
        const auto count = std::min(done, bins_.size());
        std::optional<double> expert_f0;
        if (count > 0) {
            const auto& b = bins_[count - 1];
            f.learner = learner_values(b);
            if (const auto* ref = reference_ ? reference_->at(b.index) : nullptr) {
                f.expert = expert_values(*ref);
                f.deviation.rms_delta = difference(f.learner->rms_norm, f.expert->rms_norm);
                f.deviation.stability_delta = difference(f.learner->stability_window_db, f.expert->stability_window_db);
                f.deviation.spr_delta = difference(f.learner->spr_db, f.expert->spr_db);
                expert_f0 = f.expert->f0_hz;
            }
            const auto target_hz = ev ? std::optional<double>(ev->label.freq_hz) : expert_f0;
            if (f.learner->f0_hz && target_hz && *target_hz > 0.0) {
                f.deviation.f0_cents = 1200.0 * std::log2(*f.learner->f0_hz / *target_hz);
            }
        }
        return f;
    }

    io::SessionManifest manifest_;
    EngineConfig cfg_;
    bool emg_active_ = false;
    bool audio_active_ = false;
    SessionPhase phase_ = SessionPhase::idle;
    std::optional<dsp::MvcCalibration> calibration_;
    StreamBuffer calibration_buffer_;
    std::shared_ptr<const ReferenceTrace> reference_;
    std::vector<io::PitchEvent> schedule_;
    StreamBuffer emg_;
    StreamBuffer audio_;
    std::vector<BinMetrics> bins_;
    std::size_t next_tick_ = 1;
    double clock_s_ = 0.0;
    std::size_t frames_emitted_ = 0;
};

} // namespace vocalis::feedback
