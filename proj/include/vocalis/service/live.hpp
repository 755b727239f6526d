#pragma once

#include "vocalis/feedback/broadcast.hpp"
#include "vocalis/feedback/engine.hpp"
#include "vocalis/feedback/reference.hpp"
#include "vocalis/feedback/sources.hpp"
#include "vocalis/io/session.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace vocalis::service {

struct ServiceConfig {
    std::string address = "127.0.0.1";
    unsigned short port = 8080;  // 0 picks a free port
    std::filesystem::path reference_dir = "references";
    double tick_hz = 30.0;
    double grid_ms = 200.0;
    double window_ms = 1000.0;
    double replay_speed = 1.0;  // 0 replays as fast as possible
    double chunk_ms = 20.0;
    std::uint64_t seed = 20240917;

    feedback::EngineConfig engine() const {
        feedback::EngineConfig e;
        e.tick_hz = tick_hz;
        e.kernel.grid_ms = grid_ms;
        e.kernel.window_ms = window_ms;
        return e;
    }
};

inline ServiceConfig service_config_from_json(const nlohmann::json& j, ServiceConfig base = {}) {
    try {
        if (j.contains("address")) base.address = j["address"].get<std::string>();
        if (j.contains("port")) base.port = j["port"].get<unsigned short>();
        if (j.contains("reference_dir")) base.reference_dir = j["reference_dir"].get<std::string>();
        if (j.contains("tick_hz")) base.tick_hz = j["tick_hz"].get<double>();
        if (j.contains("grid_ms")) base.grid_ms = j["grid_ms"].get<double>();
        if (j.contains("window_ms")) base.window_ms = j["window_ms"].get<double>();
        if (j.contains("replay_speed")) base.replay_speed = j["replay_speed"].get<double>();
        if (j.contains("chunk_ms")) base.chunk_ms = j["chunk_ms"].get<double>();
        if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::malformed, std::string("invalid service config: ") + e.what());
    }
    require(base.replay_speed >= 0.0, ErrorKind::invalid_argument, "replay_speed must be >= 0");
    require(base.chunk_ms > 0.0, ErrorKind::invalid_argument, "chunk_ms must be positive");
    base.engine().validate();
    return base;
}

// Reference documents in one directory, addressed by file stem.
class ReferenceLibrary {
public:
    explicit ReferenceLibrary(std::filesystem::path dir) : dir_(std::move(dir)) {}

    const std::filesystem::path& dir() const { return dir_; }

    std::vector<std::string> ids() const {
        std::vector<std::string> out;
        std::error_code ec;
        if (!std::filesystem::is_directory(dir_, ec)) return out;
        for (const auto& entry : std::filesystem::directory_iterator(dir_)) {
            if (entry.is_regular_file() && entry.path().extension() == ".json") out.push_back(entry.path().stem().string());
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::shared_ptr<const feedback::ReferenceTrace> get(const std::string& id) {
        require(!id.empty() && id.find('/') == std::string::npos && id.find("..") == std::string::npos,
                ErrorKind::invalid_argument, "invalid reference id '" + id + "'");
        std::lock_guard lock(mutex_);
        if (auto it = cache_.find(id); it != cache_.end()) return it->second;
        const auto path = dir_ / (id + ".json");
        if (!std::filesystem::exists(path)) fail(ErrorKind::missing_file, "unknown reference '" + id + "'");
        auto ref = std::make_shared<const feedback::ReferenceTrace>(feedback::read_reference(path));
        cache_.emplace(id, ref);
        return ref;
    }

    nlohmann::json listing() {
        auto arr = nlohmann::json::array();
        for (const auto& id : ids()) {
            nlohmann::json e{{"id", id}};
            try {
                const auto ref = get(id);
                e["participant_id"] = ref->participant_id;
                e["session_id"] = ref->session_id;
                if (ref->gender) e["gender"] = *ref->gender;
                e["grid_ms"] = ref->grid_ms;
                e["bins"] = ref->bins.size();
                e["pitches"] = ref->schedule.size();
            } catch (const Error& err) {
                e["error"] = err.what();
            }
            arr.push_back(e);
        }
        return arr;
    }

private:
    std::filesystem::path dir_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const feedback::ReferenceTrace>> cache_;
};

// Schedule ids: "reference" (the expert's), "manifest" (the learner's),
// "scale:<low>-<high>" (white-key scale, 2 s per note).
inline std::vector<io::PitchEvent> resolve_schedule(const std::string& id, const feedback::ReferenceTrace* ref,
                                                    const io::SessionManifest& learner) {
    if (id == "reference") {
        require(ref != nullptr, ErrorKind::invalid_argument, "schedule 'reference' needs a reference");
        return ref->schedule;
    }
    if (id == "manifest") return learner.pitch_events;
    if (id.rfind("scale:", 0) == 0) {
        const auto range = id.substr(6);
        const auto dash = range.find('-', 1);
        require(dash != std::string::npos, ErrorKind::malformed, "schedule '" + id + "' is not scale:<low>-<high>");
        return io::scale_schedule(io::parse_spn(range.substr(0, dash)), io::parse_spn(range.substr(dash + 1)));
    }
    fail(ErrorKind::invalid_argument, "unknown schedule '" + id + "'");
}

inline std::optional<std::string> gender_warning(const io::SessionManifest& learner, const feedback::ReferenceTrace& ref) {
    if (learner.gender && ref.gender && *learner.gender != *ref.gender) {
        return "reference gender (" + *ref.gender + ") differs from learner gender (" + *learner.gender + ")";
    }
    return std::nullopt;
}

inline nlohmann::json error_event(const std::string& message, std::optional<ErrorKind> kind = std::nullopt) {
    nlohmann::json j{{"event", "error"}, {"message", message}};
    if (kind) j["kind"] = std::string(to_string(*kind));
    return j;
}

// A service-side session: engine, frame fan-out and an optional replay feeder.
class LiveSession {
public:
    LiveSession(std::string id, io::Session learner, const ServiceConfig& cfg, ReferenceLibrary& library)
        : id_(std::move(id)), learner_(std::move(learner)), cfg_(cfg), library_(library),
          engine_(learner_.manifest(), cfg.engine()) {}

    ~LiveSession() { shutdown(); }

    // Stops the feeder and disconnects every subscriber.
    void shutdown() {
        stop_replay();
        frames_.close_all();
    }

    LiveSession(const LiveSession&) = delete;
    LiveSession& operator=(const LiveSession&) = delete;

    const std::string& id() const { return id_; }
    const io::SessionManifest& manifest() const { return learner_.manifest(); }
    std::vector<std::string> warnings() const {
        std::lock_guard lock(mutex_);
        return warnings_;
    }
    void add_warning(std::string w) {
        std::lock_guard lock(mutex_);
        warnings_.push_back(std::move(w));
    }

    std::shared_ptr<feedback::Subscription<std::string>> subscribe() { return frames_.subscribe(); }

    feedback::SessionPhase phase() const {
        std::lock_guard lock(mutex_);
        return engine_.phase();
    }

    nlohmann::json summary() const {
        std::lock_guard lock(mutex_);
        auto j = to_json(engine_.summary());
        j["id"] = id_;
        return j;
    }

    // Runs one control command and returns the reply event.
    nlohmann::json command(const nlohmann::json& cmd) {
        try {
            const auto name = cmd.at("cmd").get<std::string>();
            if (name == "start_calibration") return start_calibration();
            if (name == "start_practice") {
                return start_practice(cmd.value("reference", std::string()), cmd.value("schedule", std::string("reference")));
            }
            if (name == "end") return end();
            if (name == "reset") return reset();
            if (name == "chunk") return ingest(feedback::decode_chunk(cmd.at("chunk").dump()));
            return error_event("unknown command '" + name + "'", ErrorKind::invalid_argument);
        } catch (const Error& e) {
            return error_event(e.what(), e.kind());
        } catch (const nlohmann::json::exception& e) {
            return error_event(std::string("malformed command: ") + e.what(), ErrorKind::malformed);
        }
    }

    // Blocks until the replay feeder (if any) has delivered every chunk.
    void wait_replay() {
        std::thread t;
        {
            std::lock_guard lock(replay_mutex_);
            t = std::move(replay_);
        }
        if (t.joinable()) t.join();
    }

private:
    nlohmann::json phase_event() const {
        nlohmann::json j{{"event", "phase"}, {"phase", std::string(to_string(engine_.phase()))}};
        return j;
    }

    nlohmann::json start_calibration() {
        std::lock_guard lock(mutex_);
        engine_.start_calibration();
        if (learner_.has_calibration_emg()) {
            feedback::ReplaySource cal(learner_.calibration_emg(), std::nullopt, 1000.0);
            while (auto c = cal.next()) engine_.process_chunk(*c);
        }
        auto j = phase_event();
        j["calibration_window_s"] = engine_.config().mvc.window_s;
        return j;
    }

    nlohmann::json start_practice(const std::string& reference_id, const std::string& schedule_id) {
        std::shared_ptr<const feedback::ReferenceTrace> ref;
        if (!reference_id.empty()) ref = library_.get(reference_id);
        nlohmann::json reply;
        {
            std::lock_guard lock(mutex_);
            auto schedule = resolve_schedule(schedule_id, ref.get(), learner_.manifest());
            engine_.start_practice(ref, std::move(schedule));
            reply = phase_event();
            if (ref) {
                reply["reference"] = reference_id;
                if (auto w = gender_warning(learner_.manifest(), *ref)) {
                    warnings_.push_back(*w);
                    reply["warnings"] = nlohmann::json::array({*w});
                }
            }
            reply["schedule"] = schedule_id;
            reply["pitches"] = engine_.schedule().size();
        }
        if (learner_.has_emg() || learner_.has_audio()) start_replay();
        return reply;
    }

    nlohmann::json end() {
        stop_replay();
        std::lock_guard lock(mutex_);
        engine_.end_session();
        return phase_event();
    }

    nlohmann::json reset() {
        stop_replay();
        std::lock_guard lock(mutex_);
        engine_.reset();
        return phase_event();
    }

    nlohmann::json ingest(const feedback::Chunk& chunk) {
        std::vector<feedback::FeedbackFrame> frames;
        {
            std::lock_guard lock(mutex_);
            frames = engine_.process_chunk(chunk);
        }
        publish(frames);
        return {{"event", "chunk"}, {"frames", frames.size()}};
    }

    void publish(const std::vector<feedback::FeedbackFrame>& frames) {
        for (const auto& f : frames) frames_.publish(feedback::to_json(f).dump());
    }

    void start_replay() {
        stop_replay();
        stop_ = false;
        std::lock_guard lock(replay_mutex_);
        replay_ = std::thread([this] {
            auto source = feedback::ReplaySource::from_session(learner_, cfg_.chunk_ms);
            const auto start = std::chrono::steady_clock::now();
            double t = 0.0;
            while (!stop_) {
                auto chunk = source.next();
                if (!chunk) break;
                t += source.chunk_s();
                std::vector<feedback::FeedbackFrame> frames;
                {
                    std::lock_guard lock(mutex_);
                    if (engine_.phase() != feedback::SessionPhase::practicing) break;
                    try {
                        frames = engine_.process_chunk(*chunk);
                    } catch (const Error& e) {
                        frames_.publish(error_event(e.what(), e.kind()).dump());
                        break;
                    }
                }
                publish(frames);
                if (cfg_.replay_speed > 0.0) {
                    std::this_thread::sleep_until(start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                                              std::chrono::duration<double>(t / cfg_.replay_speed)));
                }
            }
            frames_.publish(nlohmann::json{{"event", "replay_complete"}}.dump());
        });
    }

    void stop_replay() {
        stop_ = true;
        wait_replay();
    }

    std::string id_;
    io::Session learner_;
    ServiceConfig cfg_;
    ReferenceLibrary& library_;
    mutable std::mutex mutex_;
    feedback::FeedbackSession engine_;
    std::vector<std::string> warnings_;
    feedback::Broadcaster<std::string> frames_;
    std::mutex replay_mutex_;
    std::thread replay_;
    std::atomic<bool> stop_{false};
};

// Sessions by id. Ids are assigned sequentially.
class SessionRegistry {
public:
    explicit SessionRegistry(ServiceConfig cfg) : cfg_(std::move(cfg)), library_(cfg_.reference_dir) {}

    const ServiceConfig& config() const { return cfg_; }
    ReferenceLibrary& references() { return library_; }

    // Body: a manifest document, or {"manifest_path": ...}; optional "reference" id
    // checks the gender pairing up front.
    nlohmann::json create(const nlohmann::json& body) {
        io::SessionManifest manifest;
        io::Session learner;
        if (body.contains("manifest_path")) {
            learner = io::load_session(body["manifest_path"].get<std::string>());
        } else {
            const auto& doc = body.contains("manifest") ? body["manifest"] : body;
            manifest = io::parse_manifest(doc, std::filesystem::current_path(), "request body");
            require(manifest.files.empty(), ErrorKind::invalid_argument,
                    "inline manifests describe live sessions and must not reference files; use manifest_path");
            learner = io::Session::from_signals(manifest, std::nullopt, std::nullopt);
        }
        std::lock_guard lock(mutex_);
        const auto id = "s" + std::to_string(++counter_);
        auto live = std::make_shared<LiveSession>(id, std::move(learner), cfg_, library_);
        nlohmann::json out{{"id", id}, {"phase", "Idle"}, {"stream", "/session/" + id + "/stream"}};
        auto warnings = nlohmann::json::array();
        if (body.contains("reference")) {
            const auto ref = library_.get(body["reference"].get<std::string>());
            if (auto w = gender_warning(live->manifest(), *ref)) {
                live->add_warning(*w);
                warnings.push_back(*w);
            }
        }
        out["warnings"] = warnings;
        sessions_.emplace(id, std::move(live));
        return out;
    }

    std::shared_ptr<LiveSession> find(const std::string& id) {
        std::lock_guard lock(mutex_);
        const auto it = sessions_.find(id);
        return it == sessions_.end() ? nullptr : it->second;
    }

    std::size_t size() {
        std::lock_guard lock(mutex_);
        return sessions_.size();
    }

    void shutdown() {
        std::lock_guard lock(mutex_);
        for (auto& [id, s] : sessions_) s->shutdown();
    }

private:
    ServiceConfig cfg_;
    ReferenceLibrary library_;
    std::mutex mutex_;
    std::map<std::string, std::shared_ptr<LiveSession>> sessions_;
    std::uint64_t counter_ = 0;
};

} // namespace vocalis::service
