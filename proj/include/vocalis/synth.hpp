#pragma once

// Deterministic synthetic signals and sessions for tests, demos and the
// acceptance suite.

#include "vocalis/geometry/landmarks.hpp"
#include "vocalis/io/emg_csv.hpp"
#include "vocalis/io/landmarks_io.hpp"
#include "vocalis/io/pitch.hpp"
#include "vocalis/io/session.hpp"
#include "vocalis/io/wav.hpp"
#include "vocalis/signal.hpp"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

namespace vocalis::synth {

inline std::vector<double> sine(double freq_hz, double rate_hz, std::size_t n, double amplitude = 1.0,
                                double phase = 0.0) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        x[i] = amplitude * std::sin(2.0 * std::numbers::pi * freq_hz * static_cast<double>(i) / rate_hz + phase);
    }
    return x;
}

// Box-Muller over mt19937_64 so the sequence does not depend on the
// standard library's distribution implementation.
class Gaussian {
public:
    explicit Gaussian(std::uint64_t seed) : rng_(seed) {}

    double operator()() {
        if (cached_) {
            cached_ = false;
            return spare_;
        }
        const double u1 = (static_cast<double>(rng_() >> 11) + 1.0) * 0x1.0p-53;
        const double u2 = static_cast<double>(rng_() >> 11) * 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
        cached_ = true;
        return r * std::cos(2.0 * std::numbers::pi * u2);
    }

    double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
    std::uint64_t bits() { return rng_(); }

private:
    std::mt19937_64 rng_;
    double spare_ = 0.0;
    bool cached_ = false;
};

inline std::vector<double> white_noise(std::size_t n, std::uint64_t seed, double sd = 1.0) {
    Gaussian g(seed);
    std::vector<double> x(n);
    for (auto& v : x) v = sd * g();
    return x;
}

// Random-sign samples of magnitude `amplitude(t)`: the rectified signal equals
// the amplitude profile exactly.
inline std::vector<double> rectified_profile(std::size_t n, double rate_hz, std::uint64_t seed,
                                             const std::function<double(double)>& amplitude) {
    Gaussian g(seed);
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double sign = (g.bits() & 1) ? 1.0 : -1.0;
        x[i] = sign * amplitude(static_cast<double>(i) / rate_hz);
    }
    return x;
}

// MVC protocol recording: `amplitudes.size()` sustained bursts of sustain_s
// separated by rest_s of silence, starting after one rest period's worth of
// lead-in (capped at 1 s), padded to total_s.
inline SampledSignal calibration_bursts(const std::vector<double>& amplitudes, double rate_hz,
                                        std::size_t channels = 2, double sustain_s = 3.0, double rest_s = 5.0,
                                        double total_s = 35.0, double noise = 0.0, std::uint64_t seed = 7) {
    const auto n = static_cast<std::size_t>(std::llround(total_s * rate_hz));
    const double lead = std::min(1.0, rest_s);
    auto profile = [&](double t) {
        for (std::size_t b = 0; b < amplitudes.size(); ++b) {
            const double start = lead + static_cast<double>(b) * (sustain_s + rest_s);
            if (t >= start && t < start + sustain_s) return amplitudes[b];
        }
        return 0.0;
    };
    std::vector<std::vector<double>> data;
    for (std::size_t c = 0; c < channels; ++c) {
        auto x = rectified_profile(n, rate_hz, seed + c, profile);
        if (noise > 0.0) {
            Gaussian g(seed + 100 + c);
            for (auto& v : x) v += noise * g();
        }
        data.push_back(std::move(x));
    }
    return SampledSignal(std::move(data), rate_hz);
}

struct SessionSpec {
    std::string participant_id = "SYN01";
    std::string session_id = "synthetic";
    io::SkillLevel skill = io::SkillLevel::professional;
    std::string low = "C4";
    std::string high = "C5";
    double hold_s = 2.0;
    double emg_rate_hz = 2000.0;
    std::size_t emg_channels = 2;
    double audio_rate_hz = 48000.0;
    double mvc_amplitude = 1.0;   // calibration burst level
    double activation = 0.4;      // mean EMG level during singing
    double activation_slope = 0.3;  // extra activation from lowest to highest pitch
    double emg_noise = 0.01;
    double post_shift = 0.0;      // added to activation (simulates training effects)
    bool with_audio = true;
    bool with_landmarks = true;
    bool with_calibration = true;
    std::uint64_t seed = 1;
    std::optional<double> duration_s;  // defaults to the schedule length
};

struct SyntheticSession {
    io::SessionManifest manifest;
    SampledSignal emg;
    std::optional<SampledSignal> audio;
    std::optional<SampledSignal> calibration;
    std::vector<geometry::LandmarkSet> landmarks;
};

// EMG: random-sign noise whose magnitude follows an activation profile that
// rises with pitch and wobbles slowly. Audio: a harmonic tone at the scheduled
// pitch whose 2-4 kHz partials scale with the same activation, so EMG level and
// singing power ratio co-vary.
inline SyntheticSession make_session(const SessionSpec& spec) {
    SyntheticSession out;
    const auto low = io::parse_spn(spec.low);
    const auto high = io::parse_spn(spec.high);
    io::ScaleOptions scale;
    scale.hold_s = spec.hold_s;
    scale.white_keys_only = io::is_white_key(low.midi) && io::is_white_key(high.midi);
    const auto events = io::scale_schedule(low, high, scale);
    const double duration = spec.duration_s.value_or(events.back().end_s);

    auto event_at = [&](double t) -> const io::PitchEvent* {
        for (const auto& e : events) {
            if (t >= e.start_s && t < e.end_s) return &e;
        }
        return nullptr;
    };
    const double span = std::max(1, high.midi - low.midi);
    auto activation = [&](double t) {
        const auto* e = event_at(t);
        if (!e) return 0.05;
        const double frac = static_cast<double>(e->label.midi - low.midi) / span;
        const double local = t - e->start_s;
        const double ramp = std::min(1.0, local / 0.15);
        const double wobble = 1.0 + 0.15 * std::sin(2.0 * std::numbers::pi * 1.3 * t);
        return ramp * (spec.activation + spec.post_shift + spec.activation_slope * frac) * wobble;
    };

    const auto emg_n = static_cast<std::size_t>(std::llround(duration * spec.emg_rate_hz));
    std::vector<std::vector<double>> emg;
    for (std::size_t c = 0; c < spec.emg_channels; ++c) {
        auto x = rectified_profile(emg_n, spec.emg_rate_hz, spec.seed * 31 + c, [&](double t) {
            return activation(t) * (c == 0 ? 1.0 : 0.8);
        });
        Gaussian g(spec.seed * 131 + c);
        for (auto& v : x) v += spec.emg_noise * g();
        emg.push_back(std::move(x));
    }
    out.emg = SampledSignal(std::move(emg), spec.emg_rate_hz);

    if (spec.with_audio) {
        const auto n = static_cast<std::size_t>(std::llround(duration * spec.audio_rate_hz));
        std::vector<double> a(n, 0.0);
        Gaussian g(spec.seed * 977);
        double phase = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double t = static_cast<double>(i) / spec.audio_rate_hz;
            const auto* e = event_at(t);
            a[i] = 1e-4 * g();
            if (!e) continue;
            const double f0 = e->label.freq_hz;
            phase += 2.0 * std::numbers::pi * f0 / spec.audio_rate_hz;
            const double act = activation(t);
            double v = 0.0;
            for (int h = 1; f0 * h < 4500.0; ++h) {
                const double fh = f0 * h;
                double amp = 0.25 / h;
                if (fh >= 1800.0) amp = 0.02 + 0.25 * act / std::sqrt(static_cast<double>(h));
                v += amp * std::sin(phase * h);
            }
            a[i] += 0.25 * v;
        }
        out.audio = SampledSignal::mono(std::move(a), spec.audio_rate_hz);
    }

    if (spec.with_calibration) {
        out.calibration = calibration_bursts({spec.mvc_amplitude * 0.8, spec.mvc_amplitude, spec.mvc_amplitude * 0.9,
                                              spec.mvc_amplitude * 0.85},
                                             spec.emg_rate_hz, spec.emg_channels, 3.0, 5.0, 35.0, spec.emg_noise,
                                             spec.seed * 7 + 3);
    }

    if (spec.with_landmarks) {
        Gaussian g(spec.seed * 4243);
        long frame = 0;
        for (const auto& e : events) {
            const double base = 40.0 + 0.8 * static_cast<double>(e.label.midi - low.midi);
            for (int k = 0; k < 5; ++k) {
                const double len = base + 0.5 * g();
                geometry::LandmarkSet lm;
                lm.frame_index = frame++;
                lm.p_vs = {100.0, 50.0};
                lm.p_vl1 = {100.0 - 0.6 * len - 2.0, 50.0 + 0.8 * len};
                lm.p_vl2 = {100.0 - 0.6 * len + 2.0, 50.0 + 0.8 * len};
                lm.p_vr1 = {100.0 + 0.6 * len - 2.0, 50.0 + 0.8 * len};
                lm.p_vr2 = {100.0 + 0.6 * len + 2.0, 50.0 + 0.8 * len};
                lm.pitch = e.label.spn;
                out.landmarks.push_back(lm);
            }
        }
    }

    auto& m = out.manifest;
    m.participant_id = spec.participant_id;
    m.session_id = spec.session_id;
    m.skill_level = spec.skill;
    m.modalities.insert(io::Modality::emg);
    m.emg_rate_hz = spec.emg_rate_hz;
    m.emg_channels = static_cast<int>(spec.emg_channels);
    if (spec.with_audio) {
        m.modalities.insert(io::Modality::audio);
        m.audio_rate_hz = spec.audio_rate_hz;
    }
    if (spec.with_landmarks) {
        m.modalities.insert(io::Modality::ultrasound);
        m.video_fps = 30.0;
    }
    m.pitch_events = events;
    return out;
}

// Writes the session files plus manifest.json into `dir`; returns the manifest path.
inline std::filesystem::path write_session(const SyntheticSession& s, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    auto m = s.manifest;
    m.base_dir = dir;
    io::write_emg_csv(dir / "emg.csv", s.emg);
    m.files["emg"] = dir / "emg.csv";
    if (s.audio) {
        io::write_wav(dir / "audio.wav", *s.audio, io::WavEncoding::float32);
        m.files["audio"] = dir / "audio.wav";
    }
    if (s.calibration) {
        io::write_emg_csv(dir / "calibration.csv", *s.calibration);
        m.files["calibration_emg"] = dir / "calibration.csv";
    }
    if (!s.landmarks.empty()) {
        io::write_landmarks(dir / "landmarks.ndjson", s.landmarks);
        m.files["landmarks"] = dir / "landmarks.ndjson";
    }
    const auto path = dir / "manifest.json";
    io::write_manifest(path, m);
    return path;
}

} // namespace vocalis::synth
