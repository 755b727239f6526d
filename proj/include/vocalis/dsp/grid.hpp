#pragma once

#include "vocalis/error.hpp"

#include <cmath>
#include <algorithm>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace vocalis::dsp {

struct TimedValue {
    double t_s = 0.0;
    double value = 0.0;
};

// Values aggregated onto consecutive bins of grid_ms, anchored at t = 0.
struct GridSeries {
    double grid_ms = 200.0;
    std::int64_t first_bin = 0;
    std::vector<double> values;
    std::vector<bool> carried;  // bin had no samples; previous value carried forward

    std::size_t size() const { return values.size(); }
    std::int64_t end_bin() const { return first_bin + static_cast<std::int64_t>(values.size()); }
    double bin_start_s(std::size_t i) const {
        return static_cast<double>(first_bin + static_cast<std::int64_t>(i)) * grid_ms / 1000.0;
    }
};

inline std::int64_t grid_bin(double t_s, double grid_ms) {
    return static_cast<std::int64_t>(std::floor(t_s * 1000.0 / grid_ms + 1e-9));
}

inline GridSeries resample_to_grid(std::span<const TimedValue> series, double grid_ms) {
    require(grid_ms > 0.0, ErrorKind::invalid_argument, "grid must be positive");
    require(!series.empty(), ErrorKind::invalid_argument, "cannot resample an empty series");
    for (std::size_t i = 1; i < series.size(); ++i) {
        require(series[i].t_s >= series[i - 1].t_s, ErrorKind::time_order, "series is not time-ordered");
    }
    GridSeries out;
    out.grid_ms = grid_ms;
    out.first_bin = grid_bin(series.front().t_s, grid_ms);
    const auto last = grid_bin(series.back().t_s, grid_ms);
    const auto bins = static_cast<std::size_t>(last - out.first_bin + 1);
    std::vector<double> sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (const auto& tv : series) {
        const auto b = static_cast<std::size_t>(grid_bin(tv.t_s, grid_ms) - out.first_bin);
        sum[b] += tv.value;
        ++count[b];
    }
    out.values.resize(bins);
    out.carried.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] > 0) {
            out.values[b] = sum[b] / static_cast<double>(count[b]);
        } else {
            // bin 0 always has a sample, so b > 0 here
            out.values[b] = out.values[b - 1];
            out.carried[b] = true;
        }
    }
    return out;
}

inline GridSeries resample_to_grid(std::span<const double> times_s, std::span<const double> values, double grid_ms) {
    require(times_s.size() == values.size(), ErrorKind::invalid_argument, "times and values differ in length");
    std::vector<TimedValue> tv(times_s.size());
    for (std::size_t i = 0; i < tv.size(); ++i) tv[i] = {times_s[i], values[i]};
    return resample_to_grid(tv, grid_ms);
}

// Restricts two grid series to their common bin span.
inline std::pair<GridSeries, GridSeries> align(const GridSeries& a, const GridSeries& b) {
    require(a.grid_ms == b.grid_ms, ErrorKind::invalid_argument, "series use different grids");
    const auto lo = std::max(a.first_bin, b.first_bin);
    const auto hi = std::min(a.end_bin(), b.end_bin());
    auto cut = [&](const GridSeries& s) {
        GridSeries out;
        out.grid_ms = s.grid_ms;
        out.first_bin = lo;
        for (auto k = lo; k < hi; ++k) {
            const auto i = static_cast<std::size_t>(k - s.first_bin);
            out.values.push_back(s.values[i]);
            out.carried.push_back(s.carried[i]);
        }
        return out;
    };
    return {cut(a), cut(b)};
}

} // namespace vocalis::dsp
