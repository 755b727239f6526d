#pragma once

#include "vocalis/error.hpp"
#include "vocalis/geometry/landmarks.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace vocalis::io {

// One JSON object per line:
//   {"frame": 12, "p_vs": [x, y], "p_vl1": [...], "p_vl2": [...],
//    "p_vr1": [...], "p_vr2": [...], "pitch": "C4"}
// "pitch" and "mm_per_px" are optional.
inline geometry::LandmarkSet landmark_from_json(const nlohmann::json& j) {
    auto point = [&](const char* key) {
        const auto& v = j.at(key);
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
            throw std::invalid_argument(std::string("field '") + key + "' must be [x, y]");
        }
        return geometry::Point{v[0].get<double>(), v[1].get<double>()};
    };
    geometry::LandmarkSet lm;
    lm.frame_index = j.at("frame").get<long>();
    lm.p_vs = point("p_vs");
    lm.p_vl1 = point("p_vl1");
    lm.p_vl2 = point("p_vl2");
    lm.p_vr1 = point("p_vr1");
    lm.p_vr2 = point("p_vr2");
    if (j.contains("pitch") && !j["pitch"].is_null()) lm.pitch = j["pitch"].get<std::string>();
    if (j.contains("mm_per_px") && !j["mm_per_px"].is_null()) lm.calibration_mm_per_px = j["mm_per_px"].get<double>();
    return lm;
}

inline nlohmann::json landmark_to_json(const geometry::LandmarkSet& lm) {
    auto point = [](geometry::Point p) { return nlohmann::json::array({p.x, p.y}); };
    nlohmann::json j;
    j["frame"] = lm.frame_index;
    j["p_vs"] = point(lm.p_vs);
    j["p_vl1"] = point(lm.p_vl1);
    j["p_vl2"] = point(lm.p_vl2);
    j["p_vr1"] = point(lm.p_vr1);
    j["p_vr2"] = point(lm.p_vr2);
    if (lm.pitch) j["pitch"] = *lm.pitch;
    if (lm.calibration_mm_per_px) j["mm_per_px"] = *lm.calibration_mm_per_px;
    return j;
}

inline std::vector<geometry::LandmarkSet> read_landmarks(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::missing_file, "cannot open landmark file " + path.string());
    std::vector<geometry::LandmarkSet> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(landmark_from_json(nlohmann::json::parse(line)));
        } catch (const std::exception& e) {
            fail(ErrorKind::malformed, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

inline void write_landmarks(const std::filesystem::path& path, const std::vector<geometry::LandmarkSet>& frames) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    for (const auto& lm : frames) out << landmark_to_json(lm).dump() << '\n';
}

} // namespace vocalis::io
