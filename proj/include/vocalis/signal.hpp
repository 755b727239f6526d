#pragma once

#include "vocalis/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace vocalis {

// Uniformly sampled multi-channel time series. Immutable after construction.
class SampledSignal {
public:
    SampledSignal() = default;

    SampledSignal(std::vector<std::vector<double>> channels, double rate_hz, double origin_s = 0.0)
        : channels_(std::move(channels)), rate_hz_(rate_hz), origin_s_(origin_s) {
        require(std::isfinite(rate_hz_) && rate_hz_ > 0.0, ErrorKind::invalid_argument,
                "sample rate must be positive");
        require(!channels_.empty(), ErrorKind::invalid_argument, "signal needs at least one channel");
        const auto n = channels_.front().size();
        for (const auto& ch : channels_) {
            require(ch.size() == n, ErrorKind::invalid_argument, "all channels must have equal length");
        }
    }

    static SampledSignal mono(std::vector<double> samples, double rate_hz, double origin_s = 0.0) {
        std::vector<std::vector<double>> channels;
        channels.push_back(std::move(samples));
        return SampledSignal(std::move(channels), rate_hz, origin_s);
    }

    double rate_hz() const noexcept { return rate_hz_; }
    double origin_s() const noexcept { return origin_s_; }
    std::size_t channel_count() const noexcept { return channels_.size(); }
    std::size_t length() const noexcept { return channels_.empty() ? 0 : channels_.front().size(); }
    bool empty() const noexcept { return length() == 0; }
    double duration_s() const noexcept { return static_cast<double>(length()) / rate_hz_; }

    std::span<const double> channel(std::size_t index) const { return channels_.at(index); }
    const std::vector<std::vector<double>>& channels() const noexcept { return channels_; }

    // Half-open sample range [begin, end), clamped to the signal length.
    SampledSignal slice(std::size_t begin, std::size_t end) const {
        end = std::min(end, length());
        begin = std::min(begin, end);
        std::vector<std::vector<double>> out;
        out.reserve(channels_.size());
        for (const auto& ch : channels_) {
            out.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(begin),
                             ch.begin() + static_cast<std::ptrdiff_t>(end));
        }
        return SampledSignal(std::move(out), rate_hz_, origin_s_ + static_cast<double>(begin) / rate_hz_);
    }

    SampledSignal channel_signal(std::size_t index) const {
        return SampledSignal::mono(std::vector<double>(channels_.at(index)), rate_hz_, origin_s_);
    }

private:
    std::vector<std::vector<double>> channels_;
    double rate_hz_ = 1.0;
    double origin_s_ = 0.0;
};

// Number of samples covering `duration_ms` at `rate_hz`, rounded to nearest.
inline std::size_t samples_for_ms(double duration_ms, double rate_hz) {
    return static_cast<std::size_t>(std::llround(duration_ms * rate_hz / 1000.0));
}

} // namespace vocalis
