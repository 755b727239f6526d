#pragma once

#include "vocalis/error.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace vocalis::geometry {

struct Point {
    double x = 0.0;
    double y = 0.0;

    friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
    friend Point operator*(double s, Point p) { return {s * p.x, s * p.y}; }
    friend bool operator==(const Point&, const Point&) = default;
};

inline double distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }
inline Point midpoint(Point a, Point b) { return 0.5 * (a + b); }

// Five annotated laryngeal key points in one ultrasound frame.
struct LandmarkSet {
    Point p_vs;   // vocal-cord junction
    Point p_vl1;  // left cord, inner end
    Point p_vl2;  // left cord, outer end
    Point p_vr1;  // right cord, inner end
    Point p_vr2;  // right cord, outer end
    long frame_index = 0;
    std::optional<double> calibration_mm_per_px;
    std::optional<std::string> pitch;
};

struct LengthMeasurement {
    double length = 0.0;
    long frame_index = 0;
    std::optional<std::string> pitch_label;
    bool millimetres = false;
};

// Mean distance from the junction to the midpoints of the left and right cords.
inline LengthMeasurement vocal_cord_length(const LandmarkSet& lm) {
    for (const auto& p : {lm.p_vs, lm.p_vl1, lm.p_vl2, lm.p_vr1, lm.p_vr2}) {
        require(std::isfinite(p.x) && std::isfinite(p.y), ErrorKind::invalid_argument,
                "landmark coordinates must be finite");
    }
    require(lm.frame_index >= 0, ErrorKind::invalid_argument, "frame index must be non-negative");
    LengthMeasurement out;
    out.frame_index = lm.frame_index;
    out.pitch_label = lm.pitch;
    out.length = 0.5 * (distance(lm.p_vs, midpoint(lm.p_vl1, lm.p_vl2)) +
                        distance(lm.p_vs, midpoint(lm.p_vr1, lm.p_vr2)));
    if (lm.calibration_mm_per_px) {
        require(*lm.calibration_mm_per_px > 0.0, ErrorKind::invalid_argument, "mm/px calibration must be positive");
        out.length *= *lm.calibration_mm_per_px;
        out.millimetres = true;
    }
    return out;
}

struct PitchLengthStats {
    std::string pitch;
    double mean = 0.0;
    std::optional<double> sd;  // sample SD, absent for a single frame
    std::size_t count = 0;
    bool under_annotated = false;  // fewer than frames_per_pitch annotations
};

// Groups measurements by pitch label (unlabelled frames are rejected) and
// reports mean and sample SD per group, ordered by label.
inline std::vector<PitchLengthStats> per_pitch_lengths(const std::vector<LengthMeasurement>& frames,
                                                       std::size_t frames_per_pitch = 5) {
    require(!frames.empty(), ErrorKind::invalid_argument, "no length measurements");
    std::map<std::string, std::vector<double>> groups;
    for (const auto& m : frames) {
        require(m.pitch_label.has_value(), ErrorKind::invalid_argument,
                "measurement for frame " + std::to_string(m.frame_index) + " has no pitch label");
        groups[*m.pitch_label].push_back(m.length);
    }
    std::vector<PitchLengthStats> out;
    for (const auto& [pitch, values] : groups) {
        PitchLengthStats s;
        s.pitch = pitch;
        s.count = values.size();
        double sum = 0.0;
        for (double v : values) sum += v;
        s.mean = sum / static_cast<double>(values.size());
        if (values.size() >= 2) {
            double ss = 0.0;
            for (double v : values) ss += (v - s.mean) * (v - s.mean);
            s.sd = std::sqrt(ss / static_cast<double>(values.size() - 1));
        }
        s.under_annotated = values.size() < frames_per_pitch;
        out.push_back(std::move(s));
    }
    return out;
}

} // namespace vocalis::geometry
