#pragma once

#include "vocalis/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace vocalis::stats {

struct PairedSample {
    std::vector<double> pre;
    std::vector<double> post;
    std::vector<std::string> labels;

    void validate() const {
        require(!pre.empty() && pre.size() == post.size(), ErrorKind::invalid_argument,
                "paired sample needs equal, non-empty pre and post vectors");
        require(labels.empty() || labels.size() == pre.size(), ErrorKind::invalid_argument,
                "paired sample labels do not match the pair count");
    }

    std::vector<double> differences() const {
        std::vector<double> d(pre.size());
        for (std::size_t i = 0; i < d.size(); ++i) d[i] = post[i] - pre[i];
        return d;
    }
};

enum class PValueMethod { exact, normal_approx };

inline std::string_view to_string(PValueMethod m) { return m == PValueMethod::exact ? "exact" : "normal_approx"; }

struct TestResult {
    double statistic_w = 0.0;  // min(W+, W-)
    double w_plus = 0.0;
    double w_minus = 0.0;
    double p_raw = 1.0;
    std::optional<double> p_fdr;
    double effect_r_rb = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    std::optional<double> effect_d;
    std::size_t n_effective = 0;
    std::size_t n_zero_dropped = 0;
    bool ties = false;
    PValueMethod method = PValueMethod::exact;
};

struct WilcoxonOptions {
    std::size_t exact_max_n = 20;  // exact p up to this many non-zero pairs, when untied
};

struct SignedRanks {
    double w_plus = 0.0;
    double w_minus = 0.0;
    std::size_t n = 0;          // non-zero differences
    std::size_t zeros = 0;
    bool ties = false;
    double tie_term = 0.0;      // sum of t^3 - t over tie groups
};

// Zero differences are dropped; tied |d| share their average rank.
inline SignedRanks signed_ranks(const std::vector<double>& diffs) {
    SignedRanks out;
    std::vector<double> nz;
    for (double d : diffs) {
        if (d == 0.0) ++out.zeros;
        else nz.push_back(d);
    }
    out.n = nz.size();
    std::vector<std::size_t> order(nz.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return std::abs(nz[a]) < std::abs(nz[b]); });
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && std::abs(nz[order[j + 1]]) == std::abs(nz[order[i]])) ++j;
        const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        const auto t = static_cast<double>(j - i + 1);
        if (j > i) {
            out.ties = true;
            out.tie_term += t * t * t - t;
        }
        for (std::size_t k = i; k <= j; ++k) {
            if (nz[order[k]] > 0) out.w_plus += rank;
            else out.w_minus += rank;
        }
        i = j + 1;
    }
    return out;
}

// P(W+ <= w) under H0 for n untied ranks, counting sign patterns.
inline double exact_lower_tail(std::size_t n, double w) {
    const std::size_t total = n * (n + 1) / 2;
    std::vector<double> counts(total + 1, 0.0);
    counts[0] = 1.0;
    for (std::size_t r = 1; r <= n; ++r) {
        for (std::size_t s = total; s >= r; --s) counts[s] += counts[s - r];
    }
    double acc = 0.0;
    const auto limit = static_cast<std::size_t>(std::floor(w + 1e-9));
    for (std::size_t s = 0; s <= std::min(limit, total); ++s) acc += counts[s];
    return acc / std::ldexp(1.0, static_cast<int>(n));
}

inline double rank_biserial_from(const SignedRanks& r) {
    if (r.n == 0) return 0.0;
    const double total = static_cast<double>(r.n) * static_cast<double>(r.n + 1) / 2.0;
    return (r.w_plus - r.w_minus) / total;
}

inline constexpr std::uint64_t kDefaultBootstrapSeed = 20240917;

struct BootstrapOptions {
    std::size_t resamples = 10000;
    std::uint64_t seed = kDefaultBootstrapSeed;
    double level = 0.95;
};

struct EffectWithCi {
    double estimate = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& v, double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

} // namespace detail

// r_rb = (W+ - W-) / (n(n+1)/2) with a percentile bootstrap CI over pairs.
// Resample indices are drawn as mt19937_64() % n so a seed reproduces the
// same CI on every standard library.
inline EffectWithCi rank_biserial(const PairedSample& sample, const BootstrapOptions& opts = {}) {
    sample.validate();
    const auto diffs = sample.differences();
    const auto ranks = signed_ranks(diffs);
    require(ranks.n > 0, ErrorKind::degenerate, "degenerate sample: all differences are zero");
    EffectWithCi out;
    out.estimate = rank_biserial_from(ranks);
    if (opts.resamples == 0) {
        out.ci_low = out.ci_high = out.estimate;
        return out;
    }
    std::mt19937_64 rng(opts.seed);
    std::vector<double> stats;
    stats.reserve(opts.resamples);
    std::vector<double> draw(diffs.size());
    for (std::size_t b = 0; b < opts.resamples; ++b) {
        for (auto& d : draw) d = diffs[static_cast<std::size_t>(rng() % diffs.size())];
        stats.push_back(rank_biserial_from(signed_ranks(draw)));
    }
    std::sort(stats.begin(), stats.end());
    const double alpha = (1.0 - opts.level) / 2.0;
    out.ci_low = detail::quantile_sorted(stats, alpha);
    out.ci_high = detail::quantile_sorted(stats, 1.0 - alpha);
    return out;
}

// Two-sided paired signed-rank test on post - pre. Exact p by enumeration of
// the null distribution when the non-zero pairs are untied and few enough;
// otherwise the normal approximation with tie and continuity corrections.
inline TestResult wilcoxon_signed_rank(const PairedSample& sample, const WilcoxonOptions& opts = {},
                                       const BootstrapOptions& boot = {}) {
    sample.validate();
    const auto ranks = signed_ranks(sample.differences());
    require(ranks.n > 0, ErrorKind::degenerate, "degenerate sample: all differences are zero");
    TestResult r;
    r.w_plus = ranks.w_plus;
    r.w_minus = ranks.w_minus;
    r.statistic_w = std::min(ranks.w_plus, ranks.w_minus);
    r.n_effective = ranks.n;
    r.n_zero_dropped = ranks.zeros;
    r.ties = ranks.ties;
    const double n = static_cast<double>(ranks.n);
    if (!ranks.ties && ranks.n <= opts.exact_max_n) {
        r.method = PValueMethod::exact;
        r.p_raw = std::min(1.0, 2.0 * exact_lower_tail(ranks.n, r.statistic_w));
    } else {
        r.method = PValueMethod::normal_approx;
        const double mean = n * (n + 1.0) / 4.0;
        const double var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - ranks.tie_term / 48.0;
        const double z = std::max(0.0, std::abs(ranks.w_plus - mean) - 0.5) / std::sqrt(var);
        r.p_raw = std::min(1.0, std::erfc(z / std::sqrt(2.0)));
    }
    const auto effect = rank_biserial(sample, boot);
    r.effect_r_rb = effect.estimate;
    r.ci_low = effect.ci_low;
    r.ci_high = effect.ci_high;
    return r;
}

// Paired Cohen's d: mean(post - pre) / sd(post - pre), sample SD.
inline double cohens_d(const std::vector<double>& pre, const std::vector<double>& post) {
    require(pre.size() == post.size(), ErrorKind::invalid_argument, "pre and post differ in length");
    require(pre.size() >= 2, ErrorKind::invalid_argument, "Cohen's d needs at least 2 pairs");
    const auto n = static_cast<double>(pre.size());
    double mean = 0.0;
    for (std::size_t i = 0; i < pre.size(); ++i) mean += post[i] - pre[i];
    mean /= n;
    double ss = 0.0;
    for (std::size_t i = 0; i < pre.size(); ++i) ss += (post[i] - pre[i] - mean) * (post[i] - pre[i] - mean);
    const double sd = std::sqrt(ss / (n - 1.0));
    require(sd > 0.0, ErrorKind::degenerate, "zero SD of differences");
    return mean / sd;
}

} // namespace vocalis::stats
