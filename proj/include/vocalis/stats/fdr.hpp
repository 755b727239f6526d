#pragma once

#include "vocalis/error.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace vocalis::stats {

// Benjamini-Hochberg step-up adjustment. Output keeps the input order.
inline std::vector<double> bh_fdr(const std::vector<double>& p) {
    for (double v : p) {
        require(v >= 0.0 && v <= 1.0, ErrorKind::invalid_argument, "p-value outside [0, 1]");
    }
    const auto m = p.size();
    std::vector<std::size_t> order(m);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return p[a] < p[b]; });
    std::vector<double> adjusted(m);
    double running = 1.0;
    for (std::size_t k = m; k-- > 0;) {
        const double rank = static_cast<double>(k + 1);
        running = std::min(running, static_cast<double>(m) / rank * p[order[k]]);
        adjusted[order[k]] = std::min(1.0, running);
    }
    return adjusted;
}

} // namespace vocalis::stats
