#include "vocalis/stats/correlation.hpp"
#include "vocalis/stats/fdr.hpp"
#include "vocalis/stats/pca.hpp"
#include "vocalis/stats/pre_post.hpp"
#include "vocalis/stats/wilcoxon.hpp"

#include "support/oracles.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <numeric>
#include <random>

using namespace vocalis;
using namespace vocalis::stats;
using Catch::Approx;

namespace {

// Distinct non-zero magnitudes with random signs.
std::vector<double> untied_differences(std::mt19937_64& rng, std::size_t n) {
    std::vector<double> mags(n);
    std::iota(mags.begin(), mags.end(), 1.0);
    std::shuffle(mags.begin(), mags.end(), rng);
    std::uniform_real_distribution<double> jitter(0.0, 0.4);
    std::bernoulli_distribution sign(0.5);
    for (auto& m : mags) m = (m + jitter(rng)) * (sign(rng) ? 1.0 : -1.0);
    return mags;
}

PairedSample from_differences(const std::vector<double>& d) {
    PairedSample s;
    for (double v : d) {
        s.pre.push_back(10.0);
        s.post.push_back(10.0 + v);
    }
    return s;
}

} // namespace

TEST_CASE("signed ranks average ties and drop zeros", "[stats][wilcoxon]") {
    const auto r = signed_ranks({0.0, 1.0, -1.0, 2.0, 0.0, 3.0});
    CHECK(r.n == 4);
    CHECK(r.zeros == 2);
    CHECK(r.ties);
    CHECK(r.w_plus == 1.5 + 3 + 4);
    CHECK(r.w_minus == 1.5);
}

TEST_CASE("exact Wilcoxon matches sign enumeration", "[stats][wilcoxon][oracle]") {
    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 50; ++rep) {
        const auto n = static_cast<std::size_t>(1 + rep % 12);
        const auto d = untied_differences(rng, n);
        const auto res = wilcoxon_signed_rank(from_differences(d));
        REQUIRE(res.method == PValueMethod::exact);
        REQUIRE(std::abs(res.p_raw - oracle::wilcoxon_enumeration_p(d)) <= 1e-12);
    }
}

TEST_CASE("Wilcoxon hand-computed values", "[stats][wilcoxon]") {
    const auto all_up = wilcoxon_signed_rank(from_differences({1, 2, 3, 4, 5}));
    CHECK(all_up.p_raw == Approx(2.0 / 32.0).epsilon(1e-14));
    CHECK(all_up.statistic_w == 0.0);
    CHECK(all_up.w_plus == 15.0);
    CHECK(all_up.effect_r_rb == 1.0);

    const auto mixed = wilcoxon_signed_rank(from_differences({-1, 2, 3, -4, 5, 6}));
    CHECK(mixed.w_minus == 5.0);
    CHECK(mixed.w_plus == 16.0);
    CHECK(mixed.effect_r_rb == Approx((16.0 - 5.0) / 21.0));
    // P(W <= 5) for n = 6 is 10/64.
    CHECK(mixed.p_raw == Approx(20.0 / 64.0).epsilon(1e-14));
}

TEST_CASE("Wilcoxon normal approximation with ties", "[stats][wilcoxon]") {
    // d = 1,1,2,2,2,3,-1 (zero dropped); tie correction on groups of 3 and 3.
    PairedSample s = from_differences({1, 1, 2, 2, 2, 3, -1, 0});
    const auto res = wilcoxon_signed_rank(s);
    CHECK(res.method == PValueMethod::normal_approx);
    CHECK(res.n_effective == 7);
    CHECK(res.n_zero_dropped == 1);
    CHECK(res.ties);
    // Ranks: |1| x3 -> 2, |2| x3 -> 5, |3| -> 7. W- = 2, W+ = 26.
    CHECK(res.w_minus == 2.0);
    CHECK(res.w_plus == 26.0);
    const double mu = 7.0 * 8.0 / 4.0;
    const double var = 7.0 * 8.0 * 15.0 / 24.0 - (24.0 + 24.0) / 48.0;
    const double z = (std::abs(2.0 - mu) - 0.5) / std::sqrt(var);
    const double p = std::erfc(z / std::sqrt(2.0));
    CHECK(res.p_raw == Approx(p).epsilon(1e-12));
}

TEST_CASE("large samples use the normal approximation", "[stats][wilcoxon]") {
    std::mt19937_64 rng(3);
    const auto d = untied_differences(rng, 30);
    const auto res = wilcoxon_signed_rank(from_differences(d));
    CHECK(res.method == PValueMethod::normal_approx);
    CHECK(res.p_raw > 0.0);
    CHECK(res.p_raw <= 1.0);
}

TEST_CASE("Wilcoxon degenerate and invalid input", "[stats][wilcoxon]") {
    PairedSample same{{1, 2, 3}, {1, 2, 3}, {}};
    try {
        wilcoxon_signed_rank(same);
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::degenerate);
    }
    PairedSample uneven{{1, 2}, {1}, {}};
    REQUIRE_THROWS_AS(wilcoxon_signed_rank(uneven), Error);
}

TEST_CASE("rank-biserial bootstrap is seeded and brackets the estimate", "[stats][wilcoxon]") {
    PairedSample s = from_differences({0.5, -0.2, 1.1, 0.9, -0.4, 1.7, 0.3, 2.2, -0.1, 0.8});
    const auto a = rank_biserial(s);
    const auto b = rank_biserial(s);
    CHECK(a.estimate == b.estimate);
    CHECK(a.ci_low == b.ci_low);
    CHECK(a.ci_high == b.ci_high);
    CHECK(a.ci_low <= a.estimate);
    CHECK(a.estimate <= a.ci_high);
    CHECK(a.ci_low >= -1.0);
    CHECK(a.ci_high <= 1.0);
    BootstrapOptions other;
    other.seed = 99;
    const auto c = rank_biserial(s, other);
    CHECK(c.estimate == a.estimate);
}

TEST_CASE("Cohen's d on paired differences", "[stats][wilcoxon]") {
    CHECK(cohens_d({1, 2, 3}, {2, 4, 6}) == Approx(2.0));  // d = 1,2,3: mean 2, sd 1
    REQUIRE_THROWS_AS(cohens_d({1, 2}, {2, 3}), Error);
}

TEST_CASE("BH matches the step-up formula", "[stats][fdr][oracle]") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> p(1 + rep % 20);
        for (auto& v : p) v = u(rng) * (rep % 3 == 0 ? 0.05 : 1.0);
        const auto got = bh_fdr(p);
        const auto want = oracle::bh_step_up(p);
        for (std::size_t i = 0; i < p.size(); ++i) REQUIRE(got[i] == Approx(want[i]).margin(1e-15));
    }
}

TEST_CASE("BH properties", "[stats][fdr]") {
    CHECK(bh_fdr({}).empty());
    CHECK(bh_fdr({0.3}) == std::vector<double>{0.3});
    const auto adj = bh_fdr({0.01, 0.04, 0.03, 0.005});
    CHECK(adj[3] == Approx(0.02));
    CHECK(adj[0] == Approx(0.02));
    CHECK(adj[2] == Approx(0.04));
    CHECK(adj[1] == Approx(0.04));
    REQUIRE_THROWS_AS(bh_fdr({0.5, 1.5}), Error);
    REQUIRE_THROWS_AS(bh_fdr({-0.1}), Error);
}

TEST_CASE("Pearson correlation", "[stats][correlation]") {
    std::mt19937_64 rng(5);
    std::normal_distribution<double> g;
    std::vector<double> x(40), y(40);
    for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = g(rng);
        y[i] = 0.6 * x[i] + g(rng);
    }
    const auto res = pearson(x, y);
    CHECK(res.r == Approx(oracle::pearson_direct(x, y)).margin(1e-12));
    CHECK(res.n == 40);

    CHECK(pearson(x, x).r == Approx(1.0).margin(1e-15));
    std::vector<double> neg(x.size());
    std::transform(x.begin(), x.end(), neg.begin(), [](double v) { return -3.0 * v + 1.0; });
    CHECK(pearson(x, neg).r == Approx(-1.0).margin(1e-15));

    // Two-sided p equals I_{1-r^2}(df/2, 1/2).
    std::vector<double> a{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    for (double r : {0.1, 0.5, 0.75, -0.9}) {
        CHECK(pearson_p(r, 10) == Approx(boost::math::ibeta(4.0, 0.5, 1.0 - r * r)).epsilon(1e-12));
    }
    CHECK(pearson_p(0.5, 10) == Approx(289.0 / 2048.0).epsilon(1e-12));

    CHECK_THROWS_AS(pearson(std::vector<double>{1, 2}, std::vector<double>{1, 2}), Error);
    CHECK_THROWS_AS(pearson(a, std::vector<double>(10, 3.0)), Error);
}

TEST_CASE("Jacobi eigen matches the closed-form 3x3 oracle", "[stats][pca][oracle]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(-2, 2);
    for (int rep = 0; rep < 200; ++rep) {
        double a[3][3];
        for (int i = 0; i < 3; ++i)
            for (int j = i; j < 3; ++j) a[i][j] = a[j][i] = u(rng);
        Matrix m(3, std::vector<double>(3));
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) m[i][j] = a[i][j];
        const auto got = jacobi_eigen(m);
        const auto want = oracle::eigenvalues_3x3(a);
        for (int k = 0; k < 3; ++k) REQUIRE(got.values[k] == Approx(want[k]).margin(1e-9));
    }
}

TEST_CASE("PCA on rank-one data", "[stats][pca]") {
    Matrix data;
    for (int i = 0; i < 12; ++i) {
        const double t = i * 0.7 - 3.0;
        data.push_back({t, 2.0 * t + 1.0, -0.5 * t});
    }
    const auto res = pca(data);
    CHECK(res.explained_variance_ratio[0] == Approx(1.0).margin(1e-9));
    CHECK(std::abs(res.explained_variance_ratio[1]) < 1e-9);
    CHECK(std::abs(res.explained_variance_ratio[2]) < 1e-9);
}

TEST_CASE("PCA matches an independent eigensolver", "[stats][pca][oracle]") {
    std::mt19937_64 rng(23);
    std::normal_distribution<double> g;
    for (bool standardize : {true, false}) {
        Matrix data;
        for (int i = 0; i < 14; ++i) {
            const double a = g(rng), b = g(rng), c = g(rng);
            data.push_back({3.0 * a + 10.0, a + 0.5 * b, 0.2 * a + b + 2.0 * c});
        }
        const auto res = pca(data, standardize);
        const auto want = oracle::eigen_symmetric(oracle::covariance(data, standardize));
        double total = 0.0;
        for (double v : want.values) total += v;
        for (std::size_t k = 0; k < 3; ++k) {
            REQUIRE(res.eigenvalues[k] == Approx(want.values[k]).margin(1e-9));
            REQUIRE(res.explained_variance_ratio[k] == Approx(want.values[k] / total).margin(1e-9));
            for (std::size_t j = 0; j < 3; ++j) REQUIRE(res.components[k][j] == Approx(want.vectors[k][j]).margin(1e-9));
        }
        for (std::size_t a = 0; a < 3; ++a) {
            for (std::size_t b = 0; b < 3; ++b) {
                double dot = 0.0;
                for (std::size_t j = 0; j < 3; ++j) dot += res.components[a][j] * res.components[b][j];
                REQUIRE(dot == Approx(a == b ? 1.0 : 0.0).margin(1e-9));
            }
        }
        // Scores are the projections of the prepared rows.
        for (std::size_t i = 0; i < data.size(); ++i) {
            double s0 = 0.0;
            for (std::size_t j = 0; j < 3; ++j) s0 += (data[i][j] - res.means[j]) / res.scales[j] * res.components[0][j];
            REQUIRE(res.scores[i][0] == Approx(s0).margin(1e-9));
        }
    }
}

TEST_CASE("PCA input validation", "[stats][pca]") {
    REQUIRE_THROWS_AS(pca({}), Error);
    REQUIRE_THROWS_AS(pca({{1, 2}}), Error);
    REQUIRE_THROWS_AS(pca({{1, 2}, {1, 3}, {1, 4}}), Error);
    REQUIRE_THROWS_AS(pca({{1, 2}, {1}}), Error);
    CHECK_NOTHROW(pca({{1, 2}, {1, 3}, {1, 4}}, false));
}

namespace {

io::FeatureTable pre_post_fixture(int participants, const std::vector<std::string>& pitches, const std::string& shifted) {
    io::FeatureTable t;
    std::mt19937_64 rng(77);
    std::normal_distribution<double> g(0.0, 0.3);
    for (int p = 0; p < participants; ++p) {
        for (const auto& name : pitches) {
            const double base = 5.0 + g(rng);
            for (auto phase : {io::Phase::pre, io::Phase::post}) {
                io::FeatureRow r;
                r.participant = "P" + std::to_string(p + 1);
                r.pitch = io::parse_spn(name);
                r.phase = phase;
                r.metric = io::Metric::stability;
                double v = base + g(rng);
                if (phase == io::Phase::post && name == shifted) v -= 2.0;
                r.value = v;
                t.add(r);
            }
        }
    }
    return t;
}

} // namespace

TEST_CASE("pre/post per pitch with FDR", "[stats][prepost]") {
    const std::vector<std::string> pitches{"C4", "D4", "E4", "F4", "G4", "A4", "B4", "C5"};
    const auto table = pre_post_fixture(12, pitches, "E4");
    const auto report = pre_post_per_pitch(table, io::Metric::stability, {});
    REQUIRE(report.tests.size() == 8);
    CHECK(report.family_size == 8);
    std::size_t best = 0;
    for (std::size_t i = 0; i < 8; ++i) {
        REQUIRE(report.tests[i].status == PitchTestStatus::ok);
        REQUIRE(report.tests[i].result->p_fdr.has_value());
        if (report.tests[i].result->p_raw < report.tests[best].result->p_raw) best = i;
    }
    CHECK(report.tests[best].pitch.spn == "E4");
    CHECK(report.tests[best].result->w_plus == 0.0);
}

TEST_CASE("pre/post edge cases", "[stats][prepost]") {
    SECTION("identical phases are degenerate") {
        io::FeatureTable t;
        for (int p = 0; p < 4; ++p) {
            for (auto phase : {io::Phase::pre, io::Phase::post}) {
                io::FeatureRow r;
                r.participant = "P" + std::to_string(p);
                r.pitch = io::parse_spn("C4");
                r.phase = phase;
                r.value = p;
                t.add(r);
            }
        }
        const auto report = pre_post_per_pitch(t, io::Metric::stability, {});
        CHECK(report.tests[0].status == PitchTestStatus::degenerate);
        CHECK(report.family_size == 0);
    }
    SECTION("missing phase excludes the participant") {
        io::FeatureTable t = pre_post_fixture(3, {"C4"}, "");
        io::FeatureRow r;
        r.participant = "P9";
        r.pitch = io::parse_spn("C4");
        r.value = 1.0;
        t.add(r);
        const auto report = pre_post_per_pitch(t, io::Metric::stability, {});
        CHECK(report.tests[0].complete_pairs == 3);
        CHECK(report.tests[0].excluded == std::vector<std::string>{"P9"});
    }
    SECTION("too few pairs") {
        const auto t = pre_post_fixture(1, {"C4"}, "");
        const auto report = pre_post_per_pitch(t, io::Metric::stability, {});
        CHECK(report.tests[0].status == PitchTestStatus::insufficient_data);
        CHECK(to_string(report.tests[0].status) == "insufficient data");
    }
}
