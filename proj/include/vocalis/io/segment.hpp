#pragma once

#include "vocalis/io/pitch.hpp"
#include "vocalis/signal.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace vocalis::io {

struct PitchSegment {
    PitchEvent event;
    SampledSignal signal;
    bool truncated = false;  // event ran past the end of the signal
};

struct Segmentation {
    std::vector<PitchSegment> segments;
    std::vector<std::string> warnings;
};

// Sample-accurate slices [start_s, end_s) on the signal's own clock.
inline Segmentation segment_by_pitch(const SampledSignal& signal, const std::vector<PitchEvent>& events) {
    Segmentation out;
    const auto length = static_cast<long long>(signal.length());
    for (const auto& ev : events) {
        require(ev.start_s < ev.end_s, ErrorKind::invalid_argument, "pitch event with start >= end");
        const auto begin = std::max(0LL, std::llround((ev.start_s - signal.origin_s()) * signal.rate_hz()));
        const auto end = std::llround((ev.end_s - signal.origin_s()) * signal.rate_hz());
        if (begin >= length) {
            out.warnings.push_back("event " + ev.label.spn + " at " + std::to_string(ev.start_s) +
                                   " s starts after the signal ends; skipped");
            continue;
        }
        const bool truncated = end > length;
        out.segments.push_back({ev, signal.slice(static_cast<std::size_t>(begin),
                                                 static_cast<std::size_t>(std::min(end, length))),
                                truncated});
        if (truncated) {
            out.warnings.push_back("event " + ev.label.spn + " truncated at the signal end");
        }
    }
    return out;
}

// Event whose [start, end) contains t.
inline const PitchEvent* event_at(const std::vector<PitchEvent>& schedule, double t) {
    for (const auto& e : schedule) {
        if (t >= e.start_s && t < e.end_s) return &e;
    }
    return nullptr;
}

} // namespace vocalis::io
