#pragma once

#include "vocalis/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace vocalis::io {

// A note in scientific pitch notation, 12-TET with A4 = 440 Hz.
struct PitchLabel {
    std::string spn;
    int midi = 69;
    double freq_hz = 440.0;

    friend bool operator==(const PitchLabel& a, const PitchLabel& b) { return a.midi == b.midi; }
};

inline double midi_to_hz(int midi) { return 440.0 * std::pow(2.0, (midi - 69) / 12.0); }

inline bool is_white_key(int midi) {
    constexpr std::array<bool, 12> white{true, false, true, false, true, true, false, true, false, true, false, true};
    return white[static_cast<std::size_t>(((midi % 12) + 12) % 12)];
}

inline std::string format_spn(int midi) {
    require(midi >= 0 && midi <= 127, ErrorKind::invalid_argument, "midi number outside [0, 127]");
    static constexpr std::array<std::string_view, 12> names{"C", "C#", "D", "D#", "E", "F",
                                                            "F#", "G", "G#", "A", "A#", "B"};
    return std::string(names[static_cast<std::size_t>(midi % 12)]) + std::to_string(midi / 12 - 1);
}

inline PitchLabel from_midi(int midi) { return {format_spn(midi), midi, midi_to_hz(midi)}; }

// letter [# | b] octave, octave in [-1, 9].
inline PitchLabel parse_spn(std::string_view text) {
    auto bad = [&](std::string_view token, const char* why) {
        fail(ErrorKind::malformed, "malformed pitch '" + std::string(text) + "': " + why + " at '" +
                                       std::string(token) + "'");
    };
    if (text.empty()) bad(text, "empty text");
    constexpr std::array<int, 7> offsets{9, 11, 0, 2, 4, 5, 7};  // A..G
    const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(text[0])));
    if (letter < 'A' || letter > 'G') bad(text.substr(0, 1), "unknown note letter");
    int semitone = offsets[static_cast<std::size_t>(letter - 'A')];
    std::size_t pos = 1;
    if (pos < text.size() && (text[pos] == '#' || text[pos] == 'b')) {
        semitone += text[pos] == '#' ? 1 : -1;
        ++pos;
    }
    const auto octave_text = text.substr(pos);
    if (octave_text.empty()) bad(text.substr(pos), "missing octave");
    int octave = 0;
    const auto [ptr, ec] = std::from_chars(octave_text.data(), octave_text.data() + octave_text.size(), octave);
    if (ec != std::errc{} || ptr != octave_text.data() + octave_text.size()) bad(octave_text, "invalid octave");
    if (octave < -1 || octave > 9) bad(octave_text, "octave outside [-1, 9]");
    const int midi = (octave + 1) * 12 + semitone;
    if (midi < 0 || midi > 127) bad(text, "note outside midi range");
    return {std::string(text), midi, midi_to_hz(midi)};
}

enum class PitchSource { scale_task, song_segment };

inline std::string_view to_string(PitchSource s) {
    return s == PitchSource::scale_task ? "scale_task" : "song_segment";
}

inline PitchSource parse_pitch_source(std::string_view s) {
    if (s == "scale_task") return PitchSource::scale_task;
    if (s == "song_segment") return PitchSource::song_segment;
    fail(ErrorKind::malformed, "unknown pitch event source '" + std::string(s) + "'");
}

struct PitchEvent {
    PitchLabel label;
    double start_s = 0.0;
    double end_s = 0.0;
    PitchSource source = PitchSource::scale_task;

    double duration_s() const { return end_s - start_s; }
};

struct ScaleOptions {
    double bpm = 80.0;  // tempo of the piano cue; carried for the UI metronome
    double hold_s = 2.0;
    bool white_keys_only = true;
    double start_s = 0.0;
};

// Back-to-back events of hold_s each, ascending from low to high inclusive.
inline std::vector<PitchEvent> scale_schedule(const PitchLabel& low, const PitchLabel& high,
                                              const ScaleOptions& opts = {}) {
    require(low.midi <= high.midi, ErrorKind::invalid_argument, "empty pitch range");
    require(opts.hold_s > 0.0 && opts.bpm > 0.0, ErrorKind::invalid_argument, "hold and tempo must be positive");
    if (opts.white_keys_only) {
        require(is_white_key(low.midi) && is_white_key(high.midi), ErrorKind::invalid_argument,
                "accidental range endpoint with white-key scheduling");
    }
    std::vector<PitchEvent> events;
    for (int m = low.midi; m <= high.midi; ++m) {
        if (opts.white_keys_only && !is_white_key(m)) continue;
        const double start = opts.start_s + static_cast<double>(events.size()) * opts.hold_s;
        events.push_back({from_midi(m), start, start + opts.hold_s, PitchSource::scale_task});
    }
    return events;
}

} // namespace vocalis::io
