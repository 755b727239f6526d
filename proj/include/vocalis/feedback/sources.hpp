#pragma once

#include "vocalis/feedback/engine.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <istream>
#include <optional>
#include <string>

namespace vocalis::feedback {

// Producer of time-ordered chunks. Replay and live inputs share this contract.
class ChunkSource {
public:
    virtual ~ChunkSource() = default;
    virtual std::optional<Chunk> next() = 0;
};

// Cuts recorded signals into consecutive chunks of chunk_ms.
class ReplaySource : public ChunkSource {
public:
    ReplaySource(std::optional<SampledSignal> emg, std::optional<SampledSignal> audio, double chunk_ms = 20.0,
                 std::optional<double> limit_s = std::nullopt)
        : emg_(std::move(emg)), audio_(std::move(audio)), chunk_s_(chunk_ms / 1000.0) {
        require(chunk_ms > 0.0, ErrorKind::invalid_argument, "chunk length must be positive");
        require(emg_ || audio_, ErrorKind::invalid_argument, "replay needs at least one signal");
        end_s_ = INFINITY;
        if (emg_) end_s_ = std::min(end_s_, emg_->duration_s());
        if (audio_) end_s_ = std::min(end_s_, audio_->duration_s());
        if (limit_s) end_s_ = std::min(end_s_, *limit_s);
    }

    static ReplaySource from_session(const io::Session& s, double chunk_ms = 20.0,
                                     std::optional<double> limit_s = std::nullopt) {
        return ReplaySource(s.has_emg() ? std::optional(s.emg()) : std::nullopt,
                            s.has_audio() ? std::optional(s.audio()) : std::nullopt, chunk_ms, limit_s);
    }

    double duration_s() const { return end_s_; }
    double chunk_s() const { return chunk_s_; }

    std::optional<Chunk> next() override {
        const double t0 = static_cast<double>(index_) * chunk_s_;
        if (t0 >= end_s_ - 1e-12) return std::nullopt;
        const double t1 = std::min(static_cast<double>(index_ + 1) * chunk_s_, end_s_);
        ++index_;
        Chunk c;
        auto cut = [&](const SampledSignal& s) {
            const auto a = sample_at(s, t0);
            const auto b = sample_at(s, t1);
            auto part = s.slice(a, b);
            return SampledSignal(part.channels(), s.rate_hz(), static_cast<double>(a) / s.rate_hz());
        };
        if (emg_) c.emg = cut(*emg_);
        if (audio_) c.audio = cut(*audio_);
        return c;
    }

private:
    static std::size_t sample_at(const SampledSignal& s, double t) {
        const auto i = static_cast<std::size_t>(std::floor(t * s.rate_hz() + 1e-9));
        return std::min(i, s.length());
    }

    std::optional<SampledSignal> emg_;
    std::optional<SampledSignal> audio_;
    double chunk_s_;
    double end_s_;
    std::size_t index_ = 0;
};

// One chunk per line:
// {"emg": {"rate_hz": 2000, "origin_s": 0.0, "channels": [[...], [...]]}, "audio": {...}}
inline std::string encode_chunk(const Chunk& c) {
    nlohmann::json j = nlohmann::json::object();
    auto put = [&](const char* key, const SampledSignal& s) {
        j[key] = {{"rate_hz", s.rate_hz()}, {"origin_s", s.origin_s()}, {"channels", s.channels()}};
    };
    if (c.emg) put("emg", *c.emg);
    if (c.audio) put("audio", *c.audio);
    return j.dump();
}

inline Chunk decode_chunk(std::string_view line) {
    try {
        const auto j = nlohmann::json::parse(line);
        Chunk c;
        auto get = [&](const char* key) -> std::optional<SampledSignal> {
            if (!j.contains(key)) return std::nullopt;
            const auto& m = j.at(key);
            return SampledSignal(m.at("channels").get<std::vector<std::vector<double>>>(), m.at("rate_hz").get<double>(),
                                 m.value("origin_s", 0.0));
        };
        c.emg = get("emg");
        c.audio = get("audio");
        return c;
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::malformed, std::string("invalid chunk record: ") + e.what());
    }
}

// Live-input seam: newline-delimited chunk records from any byte stream.
class ByteStreamSource : public ChunkSource {
public:
    explicit ByteStreamSource(std::istream& in) : in_(in) {}

    std::optional<Chunk> next() override {
        std::string line;
        while (std::getline(in_, line)) {
            if (!io::trim(line).empty()) return decode_chunk(line);
        }
        return std::nullopt;
    }

private:
    std::istream& in_;
};

} // namespace vocalis::feedback
