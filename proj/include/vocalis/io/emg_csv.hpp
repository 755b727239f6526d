#pragma once

#include "vocalis/error.hpp"
#include "vocalis/io/text.hpp"
#include "vocalis/signal.hpp"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

namespace vocalis::io {

// EMG CSV layout:
//   # rate_hz=<int> channels=<int>
//   one row per sample, one decimal column per channel
struct EmgCsvHeader {
    int rate_hz = 0;
    int channels = 0;
};

inline EmgCsvHeader parse_emg_header(std::string_view line, const std::string& where) {
    line = trim(line);
    if (line.empty() || line.front() != '#') fail(ErrorKind::malformed, where + ": missing '# rate_hz=... channels=...' header");
    line.remove_prefix(1);
    EmgCsvHeader h;
    for (auto token : split(trim(line), ' ')) {
        token = trim(token);
        if (token.empty()) continue;
        const auto eq = token.find('=');
        if (eq == std::string_view::npos) fail(ErrorKind::malformed, where + ": bad header token '" + std::string(token) + "'");
        const auto key = token.substr(0, eq);
        const auto value = token.substr(eq + 1);
        int v = 0;
        const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
        if (ec != std::errc{} || ptr != value.data() + value.size() || v <= 0) {
            fail(ErrorKind::malformed, where + ": bad header value '" + std::string(token) + "'");
        }
        if (key == "rate_hz") h.rate_hz = v;
        else if (key == "channels") h.channels = v;
    }
    if (h.rate_hz <= 0 || h.channels <= 0) fail(ErrorKind::malformed, where + ": header needs rate_hz and channels");
    return h;
}

inline EmgCsvHeader read_emg_header(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::missing_file, "cannot open EMG file " + path.string());
    std::string line;
    std::getline(in, line);
    return parse_emg_header(line, path.string());
}

inline SampledSignal parse_emg_csv(std::istream& in, const std::string& where) {
    std::string line;
    if (!std::getline(in, line)) fail(ErrorKind::malformed, where + ": empty file");
    const auto header = parse_emg_header(line, where);
    std::vector<std::vector<double>> channels(static_cast<std::size_t>(header.channels));
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        const auto cells = split(body, ',');
        if (cells.size() != channels.size()) {
            fail(ErrorKind::malformed, where + ":" + std::to_string(line_no) + ": expected " +
                                           std::to_string(channels.size()) + " columns, got " +
                                           std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < cells.size(); ++c) {
            channels[c].push_back(parse_double(cells[c], where + ":" + std::to_string(line_no)));
        }
    }
    return SampledSignal(std::move(channels), header.rate_hz);
}

inline SampledSignal read_emg_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::missing_file, "cannot open EMG file " + path.string());
    return parse_emg_csv(in, path.string());
}

inline void write_emg_csv(const std::filesystem::path& path, const SampledSignal& signal) {
    const double rate = signal.rate_hz();
    require(rate == std::floor(rate), ErrorKind::invalid_argument, "EMG CSV needs an integer sample rate");
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    out << "# rate_hz=" << static_cast<long long>(rate) << " channels=" << signal.channel_count() << '\n';
    for (std::size_t i = 0; i < signal.length(); ++i) {
        for (std::size_t c = 0; c < signal.channel_count(); ++c) {
            if (c) out << ',';
            out << format_double(signal.channel(c)[i]);
        }
        out << '\n';
    }
    if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

} // namespace vocalis::io
