#include "vocalis/io/emg_csv.hpp"
#include "vocalis/io/features.hpp"
#include "vocalis/io/landmarks_io.hpp"
#include "vocalis/io/pitch.hpp"
#include "vocalis/io/segment.hpp"
#include "vocalis/io/session.hpp"
#include "vocalis/io/wav.hpp"
#include "vocalis/synth.hpp"

#include "temp_dir.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <sstream>

using namespace vocalis;
using namespace vocalis::io;
using Catch::Approx;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no error raised");
    return ErrorKind::invalid_argument;
}

std::string message_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.what();
    }
    return {};
}

} // namespace

TEST_CASE("parse_spn reference pitches", "[io][pitch]") {
    const auto a4 = parse_spn("A4");
    CHECK(a4.midi == 69);
    CHECK(a4.freq_hz == 440.0);
    const auto g2 = parse_spn("G2");
    CHECK(g2.midi == 43);
    CHECK(g2.freq_hz == Approx(97.9989).margin(1e-4));
    const auto e6 = parse_spn("E6");
    CHECK(e6.midi == 88);
    CHECK(e6.freq_hz == Approx(1318.5102).margin(1e-4));
    CHECK(parse_spn("C-1").midi == 0);
    CHECK(parse_spn("G9").midi == 127);
    CHECK(parse_spn("Bb3").midi == parse_spn("A#3").midi);
    CHECK(parse_spn("Cb4").midi == 59);
}

TEST_CASE("parse_spn rejects malformed text naming the token", "[io][pitch]") {
    for (const char* bad : {"", "H4", "C", "C10", "C-2", "G#9", "C4x", "C 4"}) {
        INFO(bad);
        REQUIRE(kind_of([&] { parse_spn(bad); }) == ErrorKind::malformed);
    }
    CHECK(message_of([] { parse_spn("H4"); }).find("H4") != std::string::npos);
}

TEST_CASE("SPN round trip and octave law over the MIDI range", "[io][pitch][property]") {
    for (int m = 0; m <= 127; ++m) {
        const auto label = from_midi(m);
        REQUIRE(parse_spn(label.spn).midi == m);
        REQUIRE(parse_spn(format_spn(m)).spn == label.spn);
        if (m + 12 <= 127) REQUIRE(midi_to_hz(m + 12) == Approx(2.0 * midi_to_hz(m)).epsilon(1e-9));
    }
}

TEST_CASE("scale schedule", "[io][pitch]") {
    SECTION("G2..E6 white keys gives 27 two-second events") {
        const auto ev = scale_schedule(parse_spn("G2"), parse_spn("E6"));
        REQUIRE(ev.size() == 27);
        for (std::size_t i = 0; i < ev.size(); ++i) {
            CHECK(ev[i].end_s - ev[i].start_s == 2.0);
            CHECK(ev[i].source == PitchSource::scale_task);
            if (i) CHECK(ev[i].start_s == ev[i - 1].end_s);
        }
        CHECK(ev.front().label.spn == "G2");
        CHECK(ev.back().label.spn == "E6");
    }
    SECTION("single pitch") {
        const auto ev = scale_schedule(parse_spn("C4"), parse_spn("C4"));
        REQUIRE(ev.size() == 1);
        CHECK(ev[0].end_s - ev[0].start_s == 2.0);
    }
    SECTION("C4..C5 is the C major octave") {
        const auto ev = scale_schedule(parse_spn("C4"), parse_spn("C5"));
        std::vector<std::string> names;
        for (const auto& e : ev) names.push_back(e.label.spn);
        CHECK(names == std::vector<std::string>{"C4", "D4", "E4", "F4", "G4", "A4", "B4", "C5"});
    }
    SECTION("chromatic when white keys are not required") {
        ScaleOptions o;
        o.white_keys_only = false;
        CHECK(scale_schedule(parse_spn("C4"), parse_spn("C5"), o).size() == 13);
    }
    SECTION("errors") {
        REQUIRE_THROWS_AS(scale_schedule(parse_spn("C5"), parse_spn("C4")), Error);
        REQUIRE_THROWS_AS(scale_schedule(parse_spn("C#4"), parse_spn("C5")), Error);
    }
}

TEST_CASE("scale event count matches a brute-force white key count", "[io][pitch][property]") {
    const auto white = [](int m) {
        const int pc = m % 12;
        return pc == 0 || pc == 2 || pc == 4 || pc == 5 || pc == 7 || pc == 9 || pc == 11;
    };
    for (int lo = 0; lo <= 127; lo += 5) {
        for (int hi = lo; hi <= 127; hi += 7) {
            if (!white(lo) || !white(hi)) continue;
            std::size_t expected = 0;
            for (int m = lo; m <= hi; ++m) expected += white(m);
            REQUIRE(scale_schedule(from_midi(lo), from_midi(hi)).size() == expected);
        }
    }
}

TEST_CASE("EMG CSV round trip", "[io][emg]") {
    TempDir dir;
    const SampledSignal s({{0.5, -0.25, 1e-7, 3.0}, {1.0, 2.0, -3.5, 0.125}}, 2000.0);
    write_emg_csv(dir / "e.csv", s);
    const auto back = read_emg_csv(dir / "e.csv");
    CHECK(back.rate_hz() == 2000.0);
    REQUIRE(back.channel_count() == 2);
    for (std::size_t c = 0; c < 2; ++c) {
        for (std::size_t i = 0; i < 4; ++i) CHECK(back.channel(c)[i] == s.channel(c)[i]);
    }
    const auto h = read_emg_header(dir / "e.csv");
    CHECK(h.rate_hz == 2000);
    CHECK(h.channels == 2);
}

TEST_CASE("EMG CSV malformed input", "[io][emg]") {
    auto parse = [](const std::string& text) {
        std::istringstream in(text);
        return parse_emg_csv(in, "inline");
    };
    CHECK(kind_of([&] { parse("0.1,0.2\n"); }) == ErrorKind::malformed);
    CHECK(kind_of([&] { parse("# rate_hz=2000 channels=2\n0.1\n"); }) == ErrorKind::malformed);
    CHECK(kind_of([&] { parse("# rate_hz=2000 channels=1\nabc\n"); }) == ErrorKind::malformed);
    CHECK(kind_of([&] { parse("# rate_hz=x channels=1\n1\n"); }) == ErrorKind::malformed);
    CHECK(kind_of([] { read_emg_csv("/nonexistent/emg.csv"); }) == ErrorKind::missing_file);
    CHECK(parse("# rate_hz=4370 channels=1\n1\n2\n").length() == 2);
}

TEST_CASE("WAV round trip", "[io][wav]") {
    TempDir dir;
    const auto x = synth::sine(440.0, 48000.0, 4800, 0.5);
    const auto s = SampledSignal::mono(x, 48000.0);
    SECTION("float32") {
        write_wav(dir / "a.wav", s, WavEncoding::float32);
        const auto a = read_wav(dir / "a.wav");
        CHECK(a.info.rate_hz == 48000);
        REQUIRE(a.signal.length() == x.size());
        for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(a.signal.channel(0)[i] == Approx(x[i]).margin(1e-7));
        CHECK(a.warnings.empty());
    }
    SECTION("pcm16") {
        write_wav(dir / "a.wav", s, WavEncoding::pcm16);
        const auto a = read_wav(dir / "a.wav");
        for (std::size_t i = 0; i < x.size(); ++i) REQUIRE(a.signal.channel(0)[i] == Approx(x[i]).margin(1.0 / 32767));
    }
    SECTION("stereo is mixed down with a warning") {
        const SampledSignal st({{1.0, 0.5}, {0.0, -0.5}}, 8000.0);
        write_wav(dir / "s.wav", st, WavEncoding::float32);
        const auto a = read_wav(dir / "s.wav");
        CHECK(a.signal.channel_count() == 1);
        CHECK(a.signal.channel(0)[0] == 0.5);
        CHECK(a.signal.channel(0)[1] == 0.0);
        CHECK(a.warnings.size() == 1);
    }
    SECTION("garbage is malformed") {
        std::ofstream(dir / "bad.wav") << "not a wav file at all";
        CHECK(kind_of([&] { read_wav(dir / "bad.wav"); }) == ErrorKind::malformed);
    }
}

TEST_CASE("landmark NDJSON round trip", "[io][landmarks]") {
    TempDir dir;
    geometry::LandmarkSet lm;
    lm.frame_index = 12;
    lm.p_vs = {1.5, 2.5};
    lm.p_vl1 = {3, 4};
    lm.p_vl2 = {5, 6};
    lm.p_vr1 = {7, 8};
    lm.p_vr2 = {9, 10};
    lm.pitch = "G3";
    lm.calibration_mm_per_px = 0.1;
    write_landmarks(dir / "l.ndjson", {lm, lm});
    const auto back = read_landmarks(dir / "l.ndjson");
    REQUIRE(back.size() == 2);
    CHECK(back[0].p_vs == lm.p_vs);
    CHECK(back[0].p_vr2 == lm.p_vr2);
    CHECK(back[0].frame_index == 12);
    CHECK(*back[0].pitch == "G3");
    CHECK(*back[0].calibration_mm_per_px == 0.1);
    std::ofstream(dir / "bad.ndjson") << "{\"frame\": 1, \"p_vs\": [1]}\n";
    CHECK(kind_of([&] { read_landmarks(dir / "bad.ndjson"); }) == ErrorKind::malformed);
}

TEST_CASE("segment_by_pitch", "[io][segment]") {
    const auto s = SampledSignal::mono(std::vector<double>(8000, 1.0), 2000.0);
    auto ev = [](double a, double b) { return PitchEvent{parse_spn("C4"), a, b, PitchSource::song_segment}; };
    SECTION("one event covering the signal") {
        const auto seg = segment_by_pitch(s, {ev(0, 4)});
        REQUIRE(seg.segments.size() == 1);
        CHECK(seg.segments[0].signal.length() == 8000);
        CHECK_FALSE(seg.segments[0].truncated);
    }
    SECTION("two adjacent events") {
        const auto seg = segment_by_pitch(s, {ev(0, 2), ev(2, 4)});
        REQUIRE(seg.segments.size() == 2);
        CHECK(seg.segments[0].signal.length() == 4000);
        CHECK(seg.segments[1].signal.length() == 4000);
    }
    SECTION("overrun is truncated and flagged") {
        const auto seg = segment_by_pitch(s, {ev(2, 4.5)});
        CHECK(seg.segments[0].signal.length() == 4000);
        CHECK(seg.segments[0].truncated);
    }
    SECTION("event after the end is skipped with a warning") {
        const auto seg = segment_by_pitch(s, {ev(4, 6)});
        CHECK(seg.segments.empty());
        CHECK(seg.warnings.size() == 1);
    }
    SECTION("slices add up to the covered span") {
        std::vector<PitchEvent> events;
        for (int k = 0; k < 7; ++k) events.push_back(ev(k * 0.37, (k + 1) * 0.37));
        const auto seg = segment_by_pitch(s, events);
        std::size_t total = 0;
        for (const auto& p : seg.segments) total += p.signal.length();
        CHECK(total == static_cast<std::size_t>(std::llround(7 * 0.37 * 2000)));
    }
}

TEST_CASE("session manifest and lazy loading", "[io][session]") {
    TempDir dir;
    synth::SessionSpec spec;
    spec.low = "C4";
    spec.high = "E4";
    const auto syn = synth::make_session(spec);
    const auto path = synth::write_session(syn, dir.path());

    SECTION("loads with two channels at 2000 Hz") {
        const auto session = load_session(path);
        CHECK(session.manifest().schema_version == 1);
        CHECK(session.emg().channel_count() == 2);
        CHECK(session.emg().rate_hz() == 2000.0);
        CHECK(session.audio().rate_hz() == 48000.0);
        CHECK(session.landmarks().size() == 15);
        CHECK(session.manifest().pitch_events.size() == 3);
        CHECK(session.has_calibration_emg());
    }
    SECTION("manifest JSON round trip") {
        const auto m = read_manifest(path);
        const auto j = manifest_to_json(m);
        const auto again = parse_manifest(j, dir.path(), "round trip");
        CHECK(manifest_to_json(again) == j);
    }
    SECTION("missing file") {
        std::filesystem::remove(dir / "audio.wav");
        const auto msg = message_of([&] { load_session(path); });
        CHECK(msg.find("missing modality file") != std::string::npos);
        CHECK(kind_of([&] { load_session(path); }) == ErrorKind::missing_file);
    }
    SECTION("rate mismatch") {
        auto j = manifest_to_json(read_manifest(path));
        j["emg_rate_hz"] = 4370;
        std::ofstream(path) << j.dump();
        CHECK(message_of([&] { load_session(path); }).find("rate mismatch") != std::string::npos);
        CHECK(kind_of([&] { load_session(path); }) == ErrorKind::rate_mismatch);
    }
    SECTION("unsupported schema version") {
        auto j = manifest_to_json(read_manifest(path));
        j["schema_version"] = 2;
        std::ofstream(path) << j.dump();
        CHECK(kind_of([&] { load_session(path); }) == ErrorKind::malformed);
    }
    SECTION("malformed CSV surfaces on access") {
        std::ofstream(dir / "emg.csv") << "# rate_hz=2000 channels=2\n1,2\nx,y\n";
        const auto session = load_session(path);
        CHECK(kind_of([&] { (void)session.emg(); }) == ErrorKind::malformed);
    }
}

TEST_CASE("feature table and export", "[io][features]") {
    TempDir dir;
    FeatureTable table;
    SECTION("empty table writes only the header") {
        CHECK(export_features(table, dir / "f.csv") == 0);
        std::ifstream in(dir / "f.csv");
        std::string line;
        std::getline(in, line);
        CHECK(line == kFeatureColumns);
        CHECK_FALSE(std::getline(in, line));
    }
    SECTION("study-shaped export has 192 rows in key order") {
        const std::vector<std::string> pitches{"C4", "D4", "E4", "F4", "G4", "A4", "B4", "C5"};
        for (int p = 12; p >= 1; --p) {
            for (auto it = pitches.rbegin(); it != pitches.rend(); ++it) {
                for (Phase ph : {Phase::post, Phase::pre}) {
                    FeatureRow r;
                    r.participant = "P" + std::to_string(100 + p);
                    r.pitch = parse_spn(*it);
                    r.phase = ph;
                    r.value = p * 0.5;
                    r.group = p % 2 ? "A" : "B";
                    r.gender = "F";
                    r.order = p;
                    table.add(r);
                }
            }
        }
        CHECK(export_features(table, dir / "f.csv") == 192);
        const auto back = read_features(dir / "f.csv");
        REQUIRE(back.size() == 192);
        const auto rows = back.rows();
        CHECK(rows.front()->participant == "P101");
        CHECK(rows.front()->pitch.spn == "C4");
        CHECK(rows.front()->phase == Phase::pre);
        CHECK(rows[1]->phase == Phase::post);
        CHECK(rows.back()->pitch.spn == "C5");
    }
    SECTION("duplicate keys and non-finite values are rejected") {
        FeatureRow r;
        r.participant = "P1";
        r.pitch = parse_spn("C4");
        table.add(r);
        REQUIRE_THROWS_AS(table.add(r), Error);
        r.phase = Phase::post;
        r.value = std::nan("");
        REQUIRE_THROWS_AS(table.add(r), Error);
    }
}
