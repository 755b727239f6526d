#pragma once

#include "vocalis/error.hpp"
#include "vocalis/signal.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace vocalis::io {

struct WavInfo {
    std::uint16_t format = 0;  // 1 = PCM, 3 = IEEE float
    std::uint16_t channels = 0;
    std::uint32_t rate_hz = 0;
    std::uint16_t bits = 0;
    std::size_t frames = 0;
};

struct WavAudio {
    SampledSignal signal;  // mono
    WavInfo info;
    std::vector<std::string> warnings;
};

namespace detail {

inline std::uint16_t le16(const unsigned char* p) { return static_cast<std::uint16_t>(p[0] | (p[1] << 8)); }
inline std::uint32_t le32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::vector<unsigned char> slurp(const std::filesystem::path& path, std::size_t limit = SIZE_MAX) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorKind::missing_file, "cannot open WAV file " + path.string());
    std::vector<unsigned char> bytes;
    if (limit == SIZE_MAX) {
        bytes.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    } else {
        bytes.resize(limit);
        in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(limit));
        bytes.resize(static_cast<std::size_t>(in.gcount()));
    }
    return bytes;
}

struct WavLayout {
    WavInfo info;
    std::size_t data_offset = 0;
    std::size_t data_size = 0;
};

// Walks the RIFF chunks. With `header_only`, a data chunk extending past the
// buffer is accepted (its size is taken from the chunk header).
inline WavLayout parse_layout(const std::vector<unsigned char>& b, const std::string& where, bool header_only) {
    auto bad = [&](const std::string& why) { fail(ErrorKind::malformed, where + ": " + why); };
    if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 || std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
        bad("not a RIFF/WAVE file");
    }
    WavLayout layout;
    bool have_fmt = false;
    std::size_t pos = 12;
    while (pos + 8 <= b.size()) {
        const auto size = static_cast<std::size_t>(le32(b.data() + pos + 4));
        const unsigned char* id = b.data() + pos;
        const std::size_t body = pos + 8;
        if (std::memcmp(id, "fmt ", 4) == 0) {
            if (size < 16 || body + size > b.size()) bad("truncated fmt chunk");
            layout.info.format = le16(b.data() + body);
            layout.info.channels = le16(b.data() + body + 2);
            layout.info.rate_hz = le32(b.data() + body + 4);
            layout.info.bits = le16(b.data() + body + 14);
            if (layout.info.format == 0xFFFE && size >= 40) layout.info.format = le16(b.data() + body + 24);
            have_fmt = true;
        } else if (std::memcmp(id, "data", 4) == 0) {
            if (!have_fmt) bad("data chunk before fmt chunk");
            if (!header_only && body + size > b.size()) bad("truncated data chunk");
            layout.data_offset = body;
            layout.data_size = size;
            const auto frame_bytes = static_cast<std::size_t>(layout.info.channels) * (layout.info.bits / 8);
            if (frame_bytes == 0) bad("zero-sized sample frame");
            layout.info.frames = size / frame_bytes;
            return layout;
        }
        pos = body + size + (size & 1);
    }
    fail(ErrorKind::malformed, where + ": " + (have_fmt ? "no data chunk" : "no fmt chunk"));
}

inline void check_supported(const WavInfo& info, const std::string& where) {
    const bool pcm16 = info.format == 1 && info.bits == 16;
    const bool float32 = info.format == 3 && info.bits == 32;
    if (!pcm16 && !float32) {
        fail(ErrorKind::malformed, where + ": unsupported WAV encoding (need 16-bit PCM or 32-bit float)");
    }
    if (info.channels == 0 || info.rate_hz == 0) fail(ErrorKind::malformed, where + ": invalid WAV format fields");
}

} // namespace detail

inline WavInfo read_wav_info(const std::filesystem::path& path) {
    const auto bytes = detail::slurp(path, 4096);
    const auto layout = detail::parse_layout(bytes, path.string(), true);
    detail::check_supported(layout.info, path.string());
    return layout.info;
}

// Multi-channel audio is mixed down to mono by averaging, with a warning.
inline WavAudio read_wav(const std::filesystem::path& path) {
    const auto bytes = detail::slurp(path);
    const auto layout = detail::parse_layout(bytes, path.string(), false);
    const auto& info = layout.info;
    detail::check_supported(info, path.string());
    std::vector<double> mono(info.frames, 0.0);
    const unsigned char* p = bytes.data() + layout.data_offset;
    for (std::size_t f = 0; f < info.frames; ++f) {
        double sum = 0.0;
        for (std::size_t c = 0; c < info.channels; ++c) {
            if (info.bits == 16) {
                sum += static_cast<std::int16_t>(detail::le16(p)) / 32768.0;
                p += 2;
            } else {
                const std::uint32_t bits = detail::le32(p);
                float v;
                std::memcpy(&v, &bits, sizeof v);
                sum += v;
                p += 4;
            }
        }
        mono[f] = sum / info.channels;
    }
    WavAudio out{SampledSignal::mono(std::move(mono), info.rate_hz), info, {}};
    if (info.channels > 1) {
        out.warnings.push_back(path.string() + ": " + std::to_string(info.channels) +
                               " channels mixed down to mono by averaging");
    }
    return out;
}

enum class WavEncoding { pcm16, float32 };

inline void write_wav(const std::filesystem::path& path, const SampledSignal& signal,
                      WavEncoding encoding = WavEncoding::float32) {
    const double rate = signal.rate_hz();
    require(rate == std::floor(rate) && rate < 4.3e9, ErrorKind::invalid_argument, "WAV needs an integer sample rate");
    const std::uint16_t channels = static_cast<std::uint16_t>(signal.channel_count());
    const std::uint16_t bits = encoding == WavEncoding::pcm16 ? 16 : 32;
    const std::uint32_t data_size = static_cast<std::uint32_t>(signal.length() * channels * (bits / 8));
    std::vector<unsigned char> out;
    auto put16 = [&](std::uint16_t v) { out.push_back(v & 0xFF); out.push_back(v >> 8); };
    auto put32 = [&](std::uint32_t v) { for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xFF); };
    auto tag = [&](const char* t) { out.insert(out.end(), t, t + 4); };
    tag("RIFF");
    put32(36 + data_size);
    tag("WAVE");
    tag("fmt ");
    put32(16);
    put16(encoding == WavEncoding::pcm16 ? 1 : 3);
    put16(channels);
    put32(static_cast<std::uint32_t>(rate));
    put32(static_cast<std::uint32_t>(rate) * channels * (bits / 8));
    put16(static_cast<std::uint16_t>(channels * (bits / 8)));
    put16(bits);
    tag("data");
    put32(data_size);
    for (std::size_t i = 0; i < signal.length(); ++i) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double v = signal.channel(c)[i];
            if (encoding == WavEncoding::pcm16) {
                const double scaled = std::clamp(std::round(v * 32768.0), -32768.0, 32767.0);
                put16(static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
            } else {
                const float f = static_cast<float>(v);
                std::uint32_t b;
                std::memcpy(&b, &f, sizeof b);
                put32(b);
            }
        }
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) fail(ErrorKind::io, "cannot write " + path.string());
    file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!file) fail(ErrorKind::io, "write failed for " + path.string());
}

} // namespace vocalis::io
