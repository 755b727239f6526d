#pragma once

#include "vocalis/dsp/emg.hpp"
#include "vocalis/dsp/filters.hpp"
#include "vocalis/dsp/grid.hpp"
#include "vocalis/dsp/spectral.hpp"
#include "vocalis/feedback/reference.hpp"
#include "vocalis/geometry/landmarks.hpp"
#include "vocalis/io/features.hpp"
#include "vocalis/io/segment.hpp"
#include "vocalis/io/session.hpp"
#include "vocalis/stats/correlation.hpp"

#include <optional>
#include <string>
#include <vector>

namespace vocalis::app {

struct AnalysisOptions {
    double grid_ms = 200.0;
    double rms_window_ms = 200.0;
    dsp::EnvelopeOptions envelope;
    std::size_t stft_window = 2048;
    std::size_t stft_hop = 512;
};

struct PitchMetrics {
    io::PitchEvent event;
    bool truncated = false;
    std::optional<double> stability_db;
    std::vector<double> stability_per_channel;
    std::optional<double> rms_norm_mean;
    std::optional<double> spr_db;
    std::size_t spr_frames = 0;
    std::vector<dsp::TimedValue> spr_series;
};

struct SessionAnalysis {
    io::SessionManifest manifest;
    std::optional<dsp::MvcCalibration> mvc;
    std::string mvc_source;
    std::vector<PitchMetrics> pitches;
    std::vector<geometry::PitchLengthStats> lengths;
    std::optional<dsp::RmsSeries> rms;  // MVC-normalized
    std::vector<std::string> warnings;
};

inline SessionAnalysis analyze_session(const io::Session& session, const AnalysisOptions& opts = {}) {
    SessionAnalysis out;
    out.manifest = session.manifest();
    const auto& events = out.manifest.pitch_events;
    for (const auto& ev : events) out.pitches.push_back({ev, false, {}, {}, {}, {}, 0, {}});
    auto note = [&](const std::string& w) { out.warnings.push_back(w); };

    if (session.has_emg()) {
        const auto& emg = session.emg();
        const auto [mvc, source] = feedback::session_mvc(session);
        out.mvc = mvc;
        out.mvc_source = std::string(feedback::to_string(source));
        if (source == feedback::MvcSource::self) note("no calibration recording or manifest MVC; self-calibrated from the session");
        out.rms = dsp::normalize_mvc(dsp::rms_windows(emg, opts.rms_window_ms, opts.grid_ms), mvc);

        const auto seg = io::segment_by_pitch(emg, events);
        for (const auto& w : seg.warnings) note("emg: " + w);
        std::size_t j = 0;
        for (auto& pm : out.pitches) {
            if (j >= seg.segments.size() || seg.segments[j].event.start_s != pm.event.start_s) continue;
            const auto& s = seg.segments[j++];
            pm.truncated = s.truncated;
            try {
                const auto st = dsp::emg_stability(s.signal, opts.envelope);
                pm.stability_db = st.mean_db;
                pm.stability_per_channel = st.per_channel_db;
            } catch (const Error& e) {
                note("stability skipped for " + pm.event.label.spn + ": " + e.what());
            }
            double sum = 0.0;
            std::size_t n = 0;
            for (std::size_t w = 0; w < out.rms->values.size(); ++w) {
                const double t = out.rms->times_s[w];
                if (t >= pm.event.start_s && t < pm.event.end_s) {
                    sum += out.rms->values[w];
                    ++n;
                }
            }
            if (n) pm.rms_norm_mean = sum / static_cast<double>(n);
        }
    }

    if (session.has_audio()) {
        for (const auto& w : session.audio_warnings()) note("audio: " + w);
        const auto seg = io::segment_by_pitch(session.audio(), events);
        for (const auto& w : seg.warnings) note("audio: " + w);
        std::size_t j = 0;
        for (auto& pm : out.pitches) {
            if (j >= seg.segments.size() || seg.segments[j].event.start_s != pm.event.start_s) continue;
            const auto& s = seg.segments[j++];
            pm.truncated = pm.truncated || s.truncated;
            if (s.signal.length() < opts.stft_window) {
                note("SPR skipped for " + pm.event.label.spn + ": segment shorter than one STFT window");
                continue;
            }
            const auto spec = dsp::stft_magnitude(dsp::band_pass(s.signal), opts.stft_window, opts.stft_hop);
            const auto spr = dsp::spr(spec);
            pm.spr_db = spr.segment_db;
            pm.spr_frames = spr.values_db.size();
            for (std::size_t f = 0; f < spr.values_db.size(); ++f) {
                pm.spr_series.push_back({spr.frame_times_s[f], spr.values_db[f]});
            }
        }
    }

    if (session.has_landmarks()) {
        std::vector<geometry::LengthMeasurement> lengths;
        for (const auto& lm : session.landmarks()) {
            auto m = geometry::vocal_cord_length(lm);
            if (!m.pitch_label) {
                note("landmark frame " + std::to_string(lm.frame_index) + " has no pitch label; skipped");
                continue;
            }
            lengths.push_back(m);
        }
        if (!lengths.empty()) out.lengths = geometry::per_pitch_lengths(lengths);
        std::sort(out.lengths.begin(), out.lengths.end(), [](const auto& a, const auto& b) {
            return io::parse_spn(a.pitch).midi < io::parse_spn(b.pitch).midi;
        });
    }
    return out;
}

// Adds one row per (pitch, metric) that has a value; phase defaults to pre.
inline void add_features(io::FeatureTable& table, const SessionAnalysis& a, std::optional<io::Phase> phase = std::nullopt) {
    const auto& m = a.manifest;
    const auto ph = phase ? *phase : (m.phase ? io::parse_phase(*m.phase) : io::Phase::pre);
    auto add = [&](const io::PitchLabel& pitch, io::Metric metric, double value) {
        if (table.find(m.participant_id, pitch.midi, ph, metric)) return;  // repeated pitch: first occurrence wins
        io::FeatureRow r;
        r.participant = m.participant_id;
        r.pitch = pitch;
        r.phase = ph;
        r.metric = metric;
        r.value = value;
        r.group = m.group.value_or(std::string(io::to_string(m.skill_level)));
        r.gender = m.gender.value_or("");
        r.order = m.order;
        table.add(std::move(r));
    };
    for (const auto& p : a.pitches) {
        if (p.stability_db) add(p.event.label, io::Metric::stability, *p.stability_db);
        if (p.rms_norm_mean) add(p.event.label, io::Metric::rms, *p.rms_norm_mean);
        if (p.spr_db) add(p.event.label, io::Metric::spr, *p.spr_db);
    }
    for (const auto& l : a.lengths) add(io::parse_spn(l.pitch), io::Metric::length, l.mean);
}

struct NoteCorrelation {
    io::PitchEvent event;
    std::size_t bins = 0;
    std::optional<stats::CorrelationResult> result;
    std::string status = "ok";
};

struct CorrelationReport {
    std::string participant_id;
    double grid_ms = 200.0;
    std::vector<double> bin_start_s;
    std::vector<double> rms;
    std::vector<double> spr;
    std::vector<bool> in_note;
    std::optional<stats::CorrelationResult> overall;
    std::string overall_status = "ok";
    std::vector<NoteCorrelation> notes;
};

// EMG RMS and frame SPR on a common grid, correlated over note bins and per note.
inline CorrelationReport correlate_session(const io::Session& session, const AnalysisOptions& opts = {}) {
    require(session.has_emg() && session.has_audio(), ErrorKind::invalid_argument,
            "correlation needs both EMG and audio");
    CorrelationReport out;
    out.participant_id = session.manifest().participant_id;
    out.grid_ms = opts.grid_ms;
    const auto [mvc, source] = feedback::session_mvc(session);
    (void)source;
    const auto rms = dsp::normalize_mvc(dsp::rms_windows(session.emg(), opts.rms_window_ms, opts.grid_ms), mvc);
    const auto spec = dsp::stft_magnitude(dsp::band_pass(session.audio()), opts.stft_window, opts.stft_hop);
    const auto spr = dsp::spr(spec);
    const auto rms_grid = dsp::resample_to_grid(rms.times_s, rms.values, opts.grid_ms);
    const auto spr_grid = dsp::resample_to_grid(spr.frame_times_s, spr.values_db, opts.grid_ms);
    const auto [a, b] = dsp::align(rms_grid, spr_grid);
    const auto& events = session.manifest().pitch_events;
    std::vector<double> x, y;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double start = a.bin_start_s(i);
        const double mid = start + opts.grid_ms / 2000.0;
        const bool note = events.empty() || io::event_at(events, mid) != nullptr;
        out.bin_start_s.push_back(start);
        out.rms.push_back(a.values[i]);
        out.spr.push_back(b.values[i]);
        out.in_note.push_back(note);
        if (note) {
            x.push_back(a.values[i]);
            y.push_back(b.values[i]);
        }
    }
    auto correlate = [](const std::vector<double>& u, const std::vector<double>& v, std::string& status)
        -> std::optional<stats::CorrelationResult> {
        try {
            return stats::pearson(u, v);
        } catch (const Error& e) {
            status = e.kind() == ErrorKind::degenerate ? "degenerate" : "insufficient data";
            return std::nullopt;
        }
    };
    out.overall = correlate(x, y, out.overall_status);
    for (const auto& ev : events) {
        NoteCorrelation nc;
        nc.event = ev;
        std::vector<double> u, v;
        for (std::size_t i = 0; i < out.bin_start_s.size(); ++i) {
            const double mid = out.bin_start_s[i] + opts.grid_ms / 2000.0;
            if (mid >= ev.start_s && mid < ev.end_s) {
                u.push_back(out.rms[i]);
                v.push_back(out.spr[i]);
            }
        }
        nc.bins = u.size();
        nc.result = correlate(u, v, nc.status);
        out.notes.push_back(std::move(nc));
    }
    return out;
}

} // namespace vocalis::app
