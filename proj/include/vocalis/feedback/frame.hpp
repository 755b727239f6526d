#pragma once

#include "vocalis/error.hpp"
#include "vocalis/io/pitch.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <optional>
#include <string>
#include <string_view>

namespace vocalis::feedback {

enum class SessionPhase { idle, calibrating, practicing, review };

inline std::string_view to_string(SessionPhase p) {
    switch (p) {
    case SessionPhase::idle: return "Idle";
    case SessionPhase::calibrating: return "Calibrating";
    case SessionPhase::practicing: return "Practicing";
    case SessionPhase::review: return "Review";
    }
    return "Idle";
}

inline SessionPhase parse_phase(std::string_view s) {
    if (s == "Idle") return SessionPhase::idle;
    if (s == "Calibrating") return SessionPhase::calibrating;
    if (s == "Practicing") return SessionPhase::practicing;
    if (s == "Review") return SessionPhase::review;
    fail(ErrorKind::malformed, "unknown phase '" + std::string(s) + "'");
}

struct MetricValues {
    std::optional<double> envelope_mean;
    std::optional<double> stability_window_db;
    std::optional<double> rms_norm;
    std::optional<double> spr_db;
    std::optional<double> f0_hz;
};

struct Deviation {
    std::optional<double> rms_delta;
    std::optional<double> stability_delta;
    std::optional<double> spr_delta;
    std::optional<double> f0_cents;
};

struct FeedbackFrame {
    double t_s = 0.0;
    std::optional<io::PitchLabel> target_pitch;
    std::optional<MetricValues> learner;
    std::optional<MetricValues> expert;
    Deviation deviation;
    SessionPhase phase = SessionPhase::practicing;
};

namespace detail {

inline void put(nlohmann::json& j, const char* key, const std::optional<double>& v) {
    if (v && std::isfinite(*v)) j[key] = *v;
}

inline std::optional<double> get(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return std::nullopt;
    const auto& v = j.at(key);
    if (!v.is_number()) fail(ErrorKind::malformed, std::string("field '") + key + "' is not a number");
    return v.get<double>();
}

} // namespace detail

inline nlohmann::json to_json(const MetricValues& m) {
    nlohmann::json j = nlohmann::json::object();
    detail::put(j, "envelope_mean", m.envelope_mean);
    detail::put(j, "stability_window_db", m.stability_window_db);
    detail::put(j, "rms_norm", m.rms_norm);
    detail::put(j, "spr_db", m.spr_db);
    detail::put(j, "f0_hz", m.f0_hz);
    return j;
}

inline MetricValues metric_values_from_json(const nlohmann::json& j) {
    MetricValues m;
    m.envelope_mean = detail::get(j, "envelope_mean");
    m.stability_window_db = detail::get(j, "stability_window_db");
    m.rms_norm = detail::get(j, "rms_norm");
    m.spr_db = detail::get(j, "spr_db");
    m.f0_hz = detail::get(j, "f0_hz");
    return m;
}

inline nlohmann::json to_json(const FeedbackFrame& f) {
    nlohmann::json j;
    j["t_s"] = f.t_s;
    if (f.target_pitch) {
        j["target_pitch"] = {{"spn", f.target_pitch->spn}, {"midi", f.target_pitch->midi}, {"freq_hz", f.target_pitch->freq_hz}};
    }
    if (f.learner) j["learner"] = to_json(*f.learner);
    if (f.expert) j["expert"] = to_json(*f.expert);
    nlohmann::json d = nlohmann::json::object();
    detail::put(d, "rms_delta", f.deviation.rms_delta);
    detail::put(d, "stability_delta", f.deviation.stability_delta);
    detail::put(d, "spr_delta", f.deviation.spr_delta);
    detail::put(d, "f0_cents", f.deviation.f0_cents);
    j["deviation"] = d;
    j["phase"] = std::string(to_string(f.phase));
    return j;
}

inline FeedbackFrame frame_from_json(const nlohmann::json& j) {
    try {
        FeedbackFrame f;
        f.t_s = j.at("t_s").get<double>();
        if (j.contains("target_pitch")) f.target_pitch = io::parse_spn(j["target_pitch"].at("spn").get<std::string>());
        if (j.contains("learner")) f.learner = metric_values_from_json(j["learner"]);
        if (j.contains("expert")) f.expert = metric_values_from_json(j["expert"]);
        const auto& d = j.at("deviation");
        f.deviation.rms_delta = detail::get(d, "rms_delta");
        f.deviation.stability_delta = detail::get(d, "stability_delta");
        f.deviation.spr_delta = detail::get(d, "spr_delta");
        f.deviation.f0_cents = detail::get(d, "f0_cents");
        f.phase = parse_phase(j.at("phase").get<std::string>());
        return f;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::malformed, std::string("invalid feedback frame: ") + e.what());
    }
}

} // namespace vocalis::feedback
