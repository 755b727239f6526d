#include "vocalis/geometry/landmarks.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

using namespace vocalis;
using namespace vocalis::geometry;
using Catch::Approx;

namespace {

LandmarkSet three_four_five() {
    LandmarkSet lm;
    lm.p_vs = {0, 0};
    lm.p_vl1 = {2, 4};
    lm.p_vl2 = {4, 4};   // midpoint (3, 4)
    lm.p_vr1 = {3, -3};
    lm.p_vr2 = {3, -5};  // midpoint (3, -4)
    return lm;
}

LandmarkSet transform(const LandmarkSet& lm, double angle, Point shift, double scale = 1.0) {
    auto f = [&](Point p) {
        const double c = std::cos(angle), s = std::sin(angle);
        return Point{scale * (c * p.x - s * p.y) + shift.x, scale * (s * p.x + c * p.y) + shift.y};
    };
    LandmarkSet out = lm;
    out.p_vs = f(lm.p_vs);
    out.p_vl1 = f(lm.p_vl1);
    out.p_vl2 = f(lm.p_vl2);
    out.p_vr1 = f(lm.p_vr1);
    out.p_vr2 = f(lm.p_vr2);
    return out;
}

LandmarkSet random_set(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-200, 200);
    LandmarkSet lm;
    for (Point* p : {&lm.p_vs, &lm.p_vl1, &lm.p_vl2, &lm.p_vr1, &lm.p_vr2}) *p = {u(rng), u(rng)};
    return lm;
}

} // namespace

TEST_CASE("vocal cord length of the 3-4-5 fixture", "[geometry]") {
    CHECK(vocal_cord_length(three_four_five()).length == 5.0);
}

TEST_CASE("coincident landmarks have zero length", "[geometry]") {
    LandmarkSet lm;
    lm.p_vs = lm.p_vl1 = lm.p_vl2 = lm.p_vr1 = lm.p_vr2 = {12.5, -3.0};
    CHECK(vocal_cord_length(lm).length == 0.0);
}

TEST_CASE("translation leaves the length unchanged", "[geometry]") {
    const auto moved = transform(three_four_five(), 0.0, {10, -7});
    CHECK(vocal_cord_length(moved).length == Approx(5.0).epsilon(1e-15));
}

TEST_CASE("length is invariant under rigid motions", "[geometry][property]") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> angle(0, 2 * std::numbers::pi), shift(-1000, 1000);
    for (int i = 0; i < 1000; ++i) {
        const auto lm = random_set(rng);
        const double base = vocal_cord_length(lm).length;
        const auto moved = transform(lm, angle(rng), {shift(rng), shift(rng)});
        REQUIRE(std::abs(vocal_cord_length(moved).length - base) < 1e-9);
    }
}

TEST_CASE("length scales linearly", "[geometry][property]") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 200; ++i) {
        const auto lm = random_set(rng);
        for (double c : {0.1, 2.0, 37.5}) {
            REQUIRE(vocal_cord_length(transform(lm, 0.0, {0, 0}, c)).length ==
                    Approx(c * vocal_cord_length(lm).length).epsilon(1e-12));
        }
    }
}

TEST_CASE("swapping points within a cord pair is harmless", "[geometry][property]") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 200; ++i) {
        auto lm = random_set(rng);
        const double base = vocal_cord_length(lm).length;
        std::swap(lm.p_vl1, lm.p_vl2);
        std::swap(lm.p_vr1, lm.p_vr2);
        REQUIRE(vocal_cord_length(lm).length == Approx(base).epsilon(1e-14));
    }
}

TEST_CASE("mm calibration and validation", "[geometry]") {
    auto lm = three_four_five();
    lm.calibration_mm_per_px = 0.2;
    const auto m = vocal_cord_length(lm);
    CHECK(m.length == Approx(1.0));
    CHECK(m.millimetres);
    lm.p_vr2.x = std::nan("");
    REQUIRE_THROWS_AS(vocal_cord_length(lm), Error);
    lm = three_four_five();
    lm.p_vs.y = INFINITY;
    REQUIRE_THROWS_AS(vocal_cord_length(lm), Error);
}

TEST_CASE("per-pitch length statistics", "[geometry]") {
    auto m = [](double len, const char* pitch) {
        LengthMeasurement x;
        x.length = len;
        x.pitch_label = pitch;
        return x;
    };
    SECTION("five identical lengths") {
        std::vector<LengthMeasurement> v(5, m(42.0, "G3"));
        const auto stats = per_pitch_lengths(v);
        REQUIRE(stats.size() == 1);
        CHECK(stats[0].mean == 42.0);
        CHECK(*stats[0].sd == 0.0);
        CHECK_FALSE(stats[0].under_annotated);
    }
    SECTION("mean and sample SD") {
        const auto stats = per_pitch_lengths({m(4, "A3"), m(5, "A3"), m(6, "A3")});
        CHECK(stats[0].mean == 5.0);
        CHECK(*stats[0].sd == 1.0);
        CHECK(stats[0].under_annotated);
    }
    SECTION("single annotated frame per pitch has no SD") {
        const auto stats = per_pitch_lengths({m(30, "C4"), m(31, "D4")}, 5);
        REQUIRE(stats.size() == 2);
        for (const auto& s : stats) {
            CHECK(s.count == 1);
            CHECK_FALSE(s.sd.has_value());
        }
    }
    SECTION("errors") {
        REQUIRE_THROWS_AS(per_pitch_lengths({}), Error);
        LengthMeasurement unlabeled;
        REQUIRE_THROWS_AS(per_pitch_lengths({unlabeled}), Error);
    }
}
