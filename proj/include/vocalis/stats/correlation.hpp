#pragma once

#include "vocalis/error.hpp"

#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <span>

namespace vocalis::stats {

struct CorrelationResult {
    double r = 0.0;
    double p = 1.0;
    std::size_t n = 0;
};

// Two-sided p for a sample correlation r over n pairs (t with n - 2 df).
inline double pearson_p(double r, std::size_t n) {
    require(n >= 3, ErrorKind::invalid_argument, "pearson needs at least 3 observations");
    const double df = static_cast<double>(n) - 2.0;
    const double one_minus = 1.0 - r * r;
    if (one_minus <= 0.0) return 0.0;
    const double t = std::abs(r) * std::sqrt(df / one_minus);
    boost::math::students_t dist(df);
    return std::min(1.0, 2.0 * boost::math::cdf(boost::math::complement(dist, t)));
}

// Pearson product-moment correlation.
inline CorrelationResult pearson(std::span<const double> x, std::span<const double> y) {
    require(x.size() == y.size(), ErrorKind::invalid_argument, "pearson inputs differ in length");
    require(x.size() >= 3, ErrorKind::invalid_argument, "pearson needs at least 3 observations");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = x[i] - mx;
        const double dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    require(sxx > 0.0 && syy > 0.0, ErrorKind::degenerate, "zero variance");
    CorrelationResult out;
    out.n = x.size();
    out.r = std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
    out.p = pearson_p(out.r, out.n);
    return out;
}

} // namespace vocalis::stats
