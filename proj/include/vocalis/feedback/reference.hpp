#pragma once

#include "vocalis/dsp/emg.hpp"
#include "vocalis/feedback/kernel.hpp"
#include "vocalis/io/session.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace vocalis::feedback {

inline constexpr const char* kReferenceFormat = "vocalis-reference";
inline constexpr int kReferenceVersion = 1;

struct ReferenceBin {
    std::optional<double> rms_norm;
    std::optional<double> stability_window;
    std::optional<double> envelope_mean;
    std::optional<double> spr;
    std::optional<double> f0;
    bool carried = false;  // at least one field copied from an earlier bin
};

struct ReferenceTrace {
    int version = kReferenceVersion;
    double grid_ms = 200.0;
    double window_ms = 1000.0;
    std::vector<io::PitchEvent> schedule;
    std::vector<ReferenceBin> bins;
    std::string participant_id;
    std::string session_id;
    std::optional<std::string> gender;
    dsp::MvcCalibration mvc;
    std::string mvc_source;  // calibration_emg | manifest | self

    const ReferenceBin* at(std::size_t k) const { return k < bins.size() ? &bins[k] : nullptr; }
};

enum class MvcSource { calibration_emg, manifest, self };

inline std::string_view to_string(MvcSource s) {
    switch (s) {
    case MvcSource::calibration_emg: return "calibration_emg";
    case MvcSource::manifest: return "manifest";
    case MvcSource::self: return "self";
    }
    return "self";
}

// MVC protocol shortened to the recording when it is under the nominal window.
inline dsp::MvcCalibration calibrate(const SampledSignal& emg, dsp::MvcProtocol protocol = {}) {
    protocol.window_s = std::min(protocol.window_s, emg.duration_s());
    return dsp::mvc_from_calibration(emg, protocol);
}

// Prefers a calibration recording, then a manifest value, then the session itself.
inline std::pair<dsp::MvcCalibration, MvcSource> session_mvc(const io::Session& session,
                                                             const dsp::MvcProtocol& protocol = {}) {
    if (session.has_calibration_emg()) return {calibrate(session.calibration_emg(), protocol), MvcSource::calibration_emg};
    if (session.manifest().mvc) return {*session.manifest().mvc, MvcSource::manifest};
    return {calibrate(session.emg(), protocol), MvcSource::self};
}

// Grid metrics for every complete bin of the session, batch order.
inline std::vector<BinMetrics> batch_bins(const io::Session& session, const dsp::MvcCalibration* cal,
                                          const KernelConfig& cfg = {}) {
    cfg.validate();
    std::optional<StreamView> emg, audio;
    std::size_t count = SIZE_MAX;
    if (session.has_emg()) {
        const auto& s = session.emg();
        emg = StreamView{s.channels(), 0, s.rate_hz()};
        count = std::min(count, complete_bins(s.length(), cfg.grid_ms, s.rate_hz()));
    }
    if (session.has_audio()) {
        const auto& s = session.audio();
        audio = StreamView{s.channels(), 0, s.rate_hz()};
        count = std::min(count, complete_bins(s.length(), cfg.grid_ms, s.rate_hz()));
    }
    require(count != SIZE_MAX, ErrorKind::invalid_argument, "session has neither EMG nor audio");
    std::vector<BinMetrics> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        out.push_back(compute_bin(k, emg ? &*emg : nullptr, audio ? &*audio : nullptr, cal, cfg));
    }
    return out;
}

inline ReferenceTrace build_reference(const io::Session& session, const KernelConfig& cfg = {},
                                      const dsp::MvcProtocol& protocol = {}) {
    std::vector<std::string> missing;
    if (!session.has_emg()) missing.push_back("emg");
    if (!session.has_audio()) missing.push_back("audio");
    if (session.manifest().pitch_events.empty()) missing.push_back("pitch events");
    if (!missing.empty()) {
        std::string what;
        for (const auto& m : missing) what += (what.empty() ? "" : ", ") + m;
        fail(ErrorKind::invalid_argument, "reference session is missing: " + what);
    }
    const auto [mvc, source] = session_mvc(session, protocol);
    const auto bins = batch_bins(session, &mvc, cfg);

    ReferenceTrace ref;
    ref.grid_ms = cfg.grid_ms;
    ref.window_ms = cfg.window_ms;
    ref.schedule = session.manifest().pitch_events;
    ref.participant_id = session.manifest().participant_id;
    ref.session_id = session.manifest().session_id;
    ref.gender = session.manifest().gender;
    ref.mvc = mvc;
    ref.mvc_source = std::string(to_string(source));
    ReferenceBin last;
    for (const auto& b : bins) {
        ReferenceBin r{b.rms_norm, b.stability_window_db, b.envelope_mean, b.spr_db, b.f0_hz, false};
        auto carry = [&](std::optional<double>& field, const std::optional<double>& prev) {
            if (!field && prev) {
                field = prev;
                r.carried = true;
            }
        };
        carry(r.rms_norm, last.rms_norm);
        carry(r.stability_window, last.stability_window);
        carry(r.envelope_mean, last.envelope_mean);
        carry(r.spr, last.spr);
        carry(r.f0, last.f0);
        ref.bins.push_back(r);
        last = r;
    }
    return ref;
}

inline nlohmann::json to_json(const ReferenceTrace& ref) {
    nlohmann::json j;
    j["format"] = kReferenceFormat;
    j["version"] = ref.version;
    j["grid_ms"] = ref.grid_ms;
    j["window_ms"] = ref.window_ms;
    j["provenance"] = {{"participant_id", ref.participant_id}, {"session_id", ref.session_id}};
    if (ref.gender) j["provenance"]["gender"] = *ref.gender;
    j["mvc"] = {{"mvc_amplitude", ref.mvc.mvc_amplitude}, {"baseline_noise", ref.mvc.baseline_noise},
                {"source", ref.mvc_source}};
    auto schedule = nlohmann::json::array();
    for (const auto& e : ref.schedule) {
        schedule.push_back({{"pitch", e.label.spn}, {"start_s", e.start_s}, {"end_s", e.end_s},
                            {"source", std::string(io::to_string(e.source))}});
    }
    j["schedule"] = schedule;
    // Columnar bins; null marks a value that was never available.
    auto column = [&](auto member) {
        auto arr = nlohmann::json::array();
        for (const auto& b : ref.bins) {
            const auto& v = b.*member;
            arr.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
        }
        return arr;
    };
    nlohmann::json bins;
    bins["rms_norm"] = column(&ReferenceBin::rms_norm);
    bins["stability_window"] = column(&ReferenceBin::stability_window);
    bins["envelope_mean"] = column(&ReferenceBin::envelope_mean);
    bins["spr"] = column(&ReferenceBin::spr);
    bins["f0"] = column(&ReferenceBin::f0);
    auto carried = nlohmann::json::array();
    for (const auto& b : ref.bins) carried.push_back(b.carried);
    bins["carried"] = carried;
    j["bins"] = bins;
    return j;
}

inline ReferenceTrace reference_from_json(const nlohmann::json& j) {
    try {
        require(j.at("format").get<std::string>() == kReferenceFormat, ErrorKind::malformed, "not a reference document");
        ReferenceTrace ref;
        ref.version = j.at("version").get<int>();
        require(ref.version == kReferenceVersion, ErrorKind::malformed,
                "unsupported reference version " + std::to_string(ref.version));
        ref.grid_ms = j.at("grid_ms").get<double>();
        ref.window_ms = j.at("window_ms").get<double>();
        const auto& prov = j.at("provenance");
        ref.participant_id = prov.at("participant_id").get<std::string>();
        ref.session_id = prov.at("session_id").get<std::string>();
        if (prov.contains("gender")) ref.gender = prov["gender"].get<std::string>();
        ref.mvc.mvc_amplitude = j.at("mvc").at("mvc_amplitude").get<double>();
        ref.mvc.baseline_noise = j.at("mvc").at("baseline_noise").get<double>();
        ref.mvc_source = j.at("mvc").value("source", std::string("manifest"));
        for (const auto& e : j.at("schedule")) {
            ref.schedule.push_back({io::parse_spn(e.at("pitch").get<std::string>()), e.at("start_s").get<double>(),
                                    e.at("end_s").get<double>(),
                                    io::parse_pitch_source(e.value("source", std::string("scale_task")))});
        }
        const auto& bins = j.at("bins");
        const auto n = bins.at("carried").size();
        ref.bins.resize(n);
        auto read = [&](const char* key, auto member) {
            const auto& arr = bins.at(key);
            require(arr.size() == n, ErrorKind::malformed, std::string("reference column '") + key + "' has the wrong length");
            for (std::size_t i = 0; i < n; ++i) {
                if (!arr[i].is_null()) ref.bins[i].*member = arr[i].template get<double>();
            }
        };
        read("rms_norm", &ReferenceBin::rms_norm);
        read("stability_window", &ReferenceBin::stability_window);
        read("envelope_mean", &ReferenceBin::envelope_mean);
        read("spr", &ReferenceBin::spr);
        read("f0", &ReferenceBin::f0);
        for (std::size_t i = 0; i < n; ++i) ref.bins[i].carried = bins["carried"][i].get<bool>();
        return ref;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::malformed, std::string("invalid reference document: ") + e.what());
    }
}

inline void write_reference(const std::filesystem::path& path, const ReferenceTrace& ref) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    out << to_json(ref).dump() << '\n';
}

inline ReferenceTrace read_reference(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::missing_file, "cannot open reference " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::malformed, path.string() + ": invalid reference JSON: " + e.what());
    }
    return reference_from_json(j);
}

} // namespace vocalis::feedback
