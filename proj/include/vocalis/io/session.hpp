#pragma once

#include "vocalis/dsp/emg.hpp"
#include "vocalis/error.hpp"
#include "vocalis/geometry/landmarks.hpp"
#include "vocalis/io/emg_csv.hpp"
#include "vocalis/io/landmarks_io.hpp"
#include "vocalis/io/pitch.hpp"
#include "vocalis/io/wav.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vocalis::io {

enum class SkillLevel { novice, experienced, professional };
enum class Modality { emg, ultrasound, audio };

inline std::string_view to_string(SkillLevel s) {
    switch (s) {
    case SkillLevel::novice: return "novice";
    case SkillLevel::experienced: return "experienced";
    case SkillLevel::professional: return "professional";
    }
    return "novice";
}

inline std::string_view to_string(Modality m) {
    switch (m) {
    case Modality::emg: return "emg";
    case Modality::ultrasound: return "ultrasound";
    case Modality::audio: return "audio";
    }
    return "emg";
}

inline constexpr int kManifestSchemaVersion = 1;

struct SessionManifest {
    int schema_version = kManifestSchemaVersion;
    std::string participant_id;
    std::string session_id;
    SkillLevel skill_level = SkillLevel::novice;
    std::set<Modality> modalities;
    std::optional<double> emg_rate_hz;
    std::optional<int> emg_channels;
    std::optional<double> audio_rate_hz;
    std::optional<double> video_fps;
    std::vector<PitchEvent> pitch_events;
    // Keys: emg, audio, landmarks, calibration_emg. Resolved against base_dir.
    std::map<std::string, std::filesystem::path> files;
    std::optional<dsp::MvcCalibration> mvc;
    std::optional<std::string> gender;
    std::optional<std::string> group;
    std::optional<std::string> phase;  // pre | post
    std::optional<int> order;
    std::filesystem::path base_dir;

    bool has(Modality m) const { return modalities.count(m) > 0; }
};

namespace detail {

inline std::string manifest_error(const std::string& where, const std::string& what) {
    return where + ": invalid manifest: " + what;
}

} // namespace detail

inline SessionManifest parse_manifest(const nlohmann::json& j, const std::filesystem::path& base_dir,
                                      const std::string& where = "manifest") {
    SessionManifest m;
    m.base_dir = base_dir;
    try {
        m.schema_version = j.at("schema_version").get<int>();
        if (m.schema_version != kManifestSchemaVersion) {
            fail(ErrorKind::malformed, detail::manifest_error(where, "unsupported schema_version " +
                                                                          std::to_string(m.schema_version)));
        }
        m.participant_id = j.at("participant_id").get<std::string>();
        m.session_id = j.value("session_id", m.participant_id);
        const auto skill = j.value("skill_level", std::string("novice"));
        if (skill == "novice") m.skill_level = SkillLevel::novice;
        else if (skill == "experienced") m.skill_level = SkillLevel::experienced;
        else if (skill == "professional") m.skill_level = SkillLevel::professional;
        else fail(ErrorKind::malformed, detail::manifest_error(where, "unknown skill_level '" + skill + "'"));

        for (const auto& mod : j.at("modalities")) {
            const auto name = mod.get<std::string>();
            if (name == "emg") m.modalities.insert(Modality::emg);
            else if (name == "audio") m.modalities.insert(Modality::audio);
            else if (name == "ultrasound") m.modalities.insert(Modality::ultrasound);
            else fail(ErrorKind::malformed, detail::manifest_error(where, "unknown modality '" + name + "'"));
        }
        if (j.contains("emg_rate_hz")) m.emg_rate_hz = j["emg_rate_hz"].get<double>();
        if (j.contains("emg_channels")) m.emg_channels = j["emg_channels"].get<int>();
        if (j.contains("audio_rate_hz")) m.audio_rate_hz = j["audio_rate_hz"].get<double>();
        if (j.contains("video_fps")) m.video_fps = j["video_fps"].get<double>();
        if (j.contains("gender")) m.gender = j["gender"].get<std::string>();
        if (j.contains("group")) m.group = j["group"].get<std::string>();
        if (j.contains("phase")) m.phase = j["phase"].get<std::string>();
        if (j.contains("order")) m.order = j["order"].get<int>();
        if (j.contains("files")) {
            for (const auto& [key, value] : j["files"].items()) {
                std::filesystem::path p = value.get<std::string>();
                m.files[key] = p.is_absolute() ? p : base_dir / p;
            }
        }
        if (j.contains("mvc")) {
            dsp::MvcCalibration cal;
            cal.mvc_amplitude = j["mvc"].at("mvc_amplitude").get<double>();
            cal.baseline_noise = j["mvc"].value("baseline_noise", 0.0);
            m.mvc = cal;
        }
        for (const auto& ev : j.value("pitch_events", nlohmann::json::array())) {
            PitchEvent e;
            e.label = parse_spn(ev.at("pitch").get<std::string>());
            e.start_s = ev.at("start_s").get<double>();
            e.end_s = ev.at("end_s").get<double>();
            e.source = parse_pitch_source(ev.value("source", std::string("scale_task")));
            if (!(e.start_s < e.end_s)) {
                fail(ErrorKind::malformed, detail::manifest_error(where, "pitch event " + e.label.spn + " has start >= end"));
            }
            m.pitch_events.push_back(std::move(e));
        }
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::malformed, detail::manifest_error(where, e.what()));
    }
    if (m.has(Modality::emg) && !m.emg_rate_hz) fail(ErrorKind::malformed, detail::manifest_error(where, "emg_rate_hz missing"));
    if (m.has(Modality::audio) && !m.audio_rate_hz) fail(ErrorKind::malformed, detail::manifest_error(where, "audio_rate_hz missing"));
    return m;
}

inline nlohmann::json manifest_to_json(const SessionManifest& m) {
    nlohmann::json j;
    j["schema_version"] = m.schema_version;
    j["participant_id"] = m.participant_id;
    j["session_id"] = m.session_id;
    j["skill_level"] = std::string(to_string(m.skill_level));
    auto mods = nlohmann::json::array();
    for (auto mod : m.modalities) mods.push_back(std::string(to_string(mod)));
    j["modalities"] = mods;
    if (m.emg_rate_hz) j["emg_rate_hz"] = *m.emg_rate_hz;
    if (m.emg_channels) j["emg_channels"] = *m.emg_channels;
    if (m.audio_rate_hz) j["audio_rate_hz"] = *m.audio_rate_hz;
    if (m.video_fps) j["video_fps"] = *m.video_fps;
    if (m.gender) j["gender"] = *m.gender;
    if (m.group) j["group"] = *m.group;
    if (m.phase) j["phase"] = *m.phase;
    if (m.order) j["order"] = *m.order;
    nlohmann::json files = nlohmann::json::object();
    for (const auto& [key, path] : m.files) {
        files[key] = path.lexically_relative(m.base_dir).empty() ? path.string()
                                                                 : path.lexically_relative(m.base_dir).string();
    }
    j["files"] = files;
    if (m.mvc) j["mvc"] = {{"mvc_amplitude", m.mvc->mvc_amplitude}, {"baseline_noise", m.mvc->baseline_noise}};
    auto events = nlohmann::json::array();
    for (const auto& e : m.pitch_events) {
        events.push_back({{"pitch", e.label.spn}, {"start_s", e.start_s}, {"end_s", e.end_s},
                          {"source", std::string(to_string(e.source))}});
    }
    j["pitch_events"] = events;
    return j;
}

inline void write_manifest(const std::filesystem::path& path, const SessionManifest& m) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    out << manifest_to_json(m).dump(2) << '\n';
}

// Value computed on first access and shared by every copy of the handle.
template <class T>
class Lazy {
public:
    Lazy() = default;
    explicit Lazy(std::function<T()> loader) : state_(std::make_shared<State>()) { state_->loader = std::move(loader); }

    bool valid() const { return state_ != nullptr; }

    const T& get() const {
        require(valid(), ErrorKind::invalid_argument, "modality not present in this session");
        std::call_once(state_->once, [this] { state_->value.emplace(state_->loader()); });
        return *state_->value;
    }

private:
    struct State {
        std::once_flag once;
        std::function<T()> loader;
        std::optional<T> value;
    };
    std::shared_ptr<State> state_;
};

// A validated session. Signal data is read on first access.
class Session {
public:
    Session() = default;
    explicit Session(SessionManifest manifest) : manifest_(std::move(manifest)) {}

    const SessionManifest& manifest() const { return manifest_; }
    bool has_emg() const { return emg_.valid(); }
    bool has_audio() const { return audio_.valid(); }
    bool has_landmarks() const { return landmarks_.valid(); }
    bool has_calibration_emg() const { return calibration_emg_.valid(); }

    const SampledSignal& emg() const { return emg_.get(); }
    const SampledSignal& audio() const { return audio_.get().signal; }
    const std::vector<std::string>& audio_warnings() const { return audio_.get().warnings; }
    const std::vector<geometry::LandmarkSet>& landmarks() const { return landmarks_.get(); }
    const SampledSignal& calibration_emg() const { return calibration_emg_.get(); }

    // In-memory construction (tests, live sessions, adapters).
    static Session from_signals(SessionManifest manifest, std::optional<SampledSignal> emg,
                                std::optional<SampledSignal> audio,
                                std::optional<SampledSignal> calibration_emg = std::nullopt) {
        Session s(std::move(manifest));
        if (emg) s.emg_ = Lazy<SampledSignal>([v = *emg] { return v; });
        if (audio) s.audio_ = Lazy<WavAudio>([v = *audio] { return WavAudio{v, {}, {}}; });
        if (calibration_emg) s.calibration_emg_ = Lazy<SampledSignal>([v = *calibration_emg] { return v; });
        return s;
    }

private:
    friend Session load_session(const std::filesystem::path&);
    SessionManifest manifest_;
    Lazy<SampledSignal> emg_;
    Lazy<WavAudio> audio_;
    Lazy<std::vector<geometry::LandmarkSet>> landmarks_;
    Lazy<SampledSignal> calibration_emg_;
};

inline SessionManifest read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::missing_file, "cannot open manifest " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::malformed, path.string() + ": invalid manifest JSON: " + e.what());
    }
    return parse_manifest(j, path.parent_path(), path.string());
}

// Validates the manifest against file headers; sample data stays on disk
// until first access.
inline Session load_session(const std::filesystem::path& manifest_path) {
    Session s(read_manifest(manifest_path));
    const auto& m = s.manifest_;
    auto file_for = [&](const std::string& key, std::string_view modality) {
        const auto it = m.files.find(key);
        if (it == m.files.end()) {
            fail(ErrorKind::malformed, manifest_path.string() + ": no file declared for modality " + std::string(modality));
        }
        if (!std::filesystem::exists(it->second)) {
            fail(ErrorKind::missing_file, "missing modality file: " + it->second.string());
        }
        return it->second;
    };
    auto check_emg_header = [&](const std::filesystem::path& path) {
        const auto header = read_emg_header(path);
        if (static_cast<double>(header.rate_hz) != *m.emg_rate_hz) {
            fail(ErrorKind::rate_mismatch, "rate mismatch: " + path.string() + " declares " +
                                               std::to_string(header.rate_hz) + " Hz, manifest says " +
                                               format_double(*m.emg_rate_hz) + " Hz");
        }
        if (m.emg_channels && header.channels != *m.emg_channels) {
            fail(ErrorKind::rate_mismatch, "channel mismatch: " + path.string() + " has " +
                                               std::to_string(header.channels) + " channels, manifest says " +
                                               std::to_string(*m.emg_channels));
        }
    };
    if (m.has(Modality::emg)) {
        const auto path = file_for("emg", "emg");
        check_emg_header(path);
        s.emg_ = Lazy<SampledSignal>([path] { return read_emg_csv(path); });
        if (m.files.count("calibration_emg")) {
            const auto cal = file_for("calibration_emg", "emg calibration");
            check_emg_header(cal);
            s.calibration_emg_ = Lazy<SampledSignal>([cal] { return read_emg_csv(cal); });
        }
    }
    if (m.has(Modality::audio)) {
        const auto path = file_for("audio", "audio");
        const auto info = read_wav_info(path);
        if (static_cast<double>(info.rate_hz) != *m.audio_rate_hz) {
            fail(ErrorKind::rate_mismatch, "rate mismatch: " + path.string() + " is " + std::to_string(info.rate_hz) +
                                               " Hz, manifest says " + format_double(*m.audio_rate_hz) + " Hz");
        }
        s.audio_ = Lazy<WavAudio>([path] { return read_wav(path); });
    }
    if (m.has(Modality::ultrasound)) {
        const auto path = file_for("landmarks", "ultrasound");
        s.landmarks_ = Lazy<std::vector<geometry::LandmarkSet>>([path] { return read_landmarks(path); });
    }
    return s;
}

} // namespace vocalis::io
