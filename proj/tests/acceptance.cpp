// Acceptance suite: one PASS/FAIL/SKIP line per criterion, exit 1 on any FAIL.
#include "support/oracles.hpp"
#include "feedback_fixtures.hpp"

#include "vocalis/app/analysis.hpp"
#include "vocalis/dsp/emg.hpp"
#include "vocalis/dsp/filters.hpp"
#include "vocalis/dsp/spectral.hpp"
#include "vocalis/geometry/landmarks.hpp"
#include "vocalis/io/pitch.hpp"
#include "vocalis/stats/fdr.hpp"
#include "vocalis/stats/pca.hpp"
#include "vocalis/stats/wilcoxon.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

using namespace vocalis;

namespace {

struct Skip {
    std::string reason;
};

// Collects the first failed check; later checks still run so the detail names the first breach.
class Checker {
public:
    void operator()(bool ok, const std::string& what) {
        if (!ok && failure_.empty()) failure_ = what;
    }
    bool ok() const { return failure_.empty(); }
    const std::string& failure() const { return failure_; }
    std::string note;

private:
    std::string failure_;
};

struct Criterion {
    std::string name;
    double limit_s;
    std::function<void(Checker&)> body;
};

std::string fmt(double v, int precision = 12) {
    std::ostringstream s;
    s << std::setprecision(precision) << v;
    return s.str();
}

// ---- criteria --------------------------------------------------------------

void stability(Checker& check) {
    const std::vector<double> constant(64, 5.0);
    check(dsp::stability(constant).s_db == 0.0, "constant envelope is not exactly 0");
    std::vector<double> alt(65);
    for (std::size_t i = 0; i < alt.size(); ++i) alt[i] = i % 2 ? 2.0 : 1.0;
    const double want = 6.020599913279624;  // 20 log10 2
    const double got = dsp::stability(alt).s_db;
    check(std::abs(got - want) < 1e-9, "alternating [1,2] gave " + fmt(got));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.1, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> env(2 + rng() % 100);
        for (auto& v : env) v = u(rng);
        const double base = dsp::stability(env).s_db;
        for (double c : {1e-3, 1.0, 1e3}) {
            auto scaled = env;
            for (auto& v : scaled) v *= c;
            const double s = dsp::stability(scaled).s_db;
            check(std::abs(s - base) <= 1e-12 * std::max(1.0, base), "scale " + fmt(c) + " changed s by " + fmt(s - base));
        }
    }
    check.note = "s(alt)=" + fmt(got);
}

void envelope(Checker& check) {
    const auto x = synth::sine(1000.0, 48000.0, 48000);
    const auto env = dsp::hilbert_envelope(x, 48000.0, 0.05);
    double worst = 0.0;
    for (double v : env.values) worst = std::max(worst, std::abs(v - 1.0));
    check(worst <= 0.01, "sine envelope off by " + fmt(worst));

    std::mt19937_64 rng(9);
    std::normal_distribution<double> g;
    double below = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> y(500 + rng() % 1500);
        for (auto& v : y) v = g(rng);
        const auto e = dsp::hilbert_envelope(y, 2000.0, 0.05);
        for (std::size_t i = 0; i < e.values.size(); ++i) {
            below = std::max(below, std::abs(y[i + e.trimmed_per_end]) - e.values[i]);
        }
    }
    check(below <= 1e-6, "envelope below |x| by " + fmt(below));
    check.note = "max |env-1|=" + fmt(worst, 3);
}

void spr(Checker& check) {
    const double rate = 48000.0;
    auto tones = synth::sine(750.0, rate, 48000);
    const auto hi = synth::sine(3000.0, rate, 48000);
    for (std::size_t i = 0; i < tones.size(); ++i) tones[i] += hi[i];
    const double equal = dsp::spr(dsp::stft_magnitude(SampledSignal::mono(tones, rate))).segment_db;
    check(std::abs(equal) <= 0.5, "equal tones gave " + fmt(equal) + " dB");

    const auto noise = synth::white_noise(96000, 17);
    const double white = dsp::spr(dsp::stft_magnitude(SampledSignal::mono(noise, rate))).segment_db;
    const double bandwidth_ratio_db = 10.0 * std::log10(2000.0 / 500.0);
    check(std::abs(white - bandwidth_ratio_db) <= 1.0, "white noise gave " + fmt(white) + " dB");

    const auto base = dsp::spr(dsp::stft_magnitude(SampledSignal::mono(noise, rate)));
    for (double c : {1e-2, 0.5, 3.0, 1e3}) {
        auto y = noise;
        for (auto& v : y) v *= c;
        const auto s = dsp::spr(dsp::stft_magnitude(SampledSignal::mono(y, rate)));
        check(std::abs(s.segment_db - base.segment_db) < 1e-9, "gain " + fmt(c) + " moved the segment SPR");
        for (std::size_t i = 0; i < s.values_db.size(); ++i) {
            check(std::abs(s.values_db[i] - base.values_db[i]) < 1e-9, "gain " + fmt(c) + " moved frame " + std::to_string(i));
        }
    }
    check.note = "equal=" + fmt(equal, 4) + " dB, white=" + fmt(white, 4) + " dB";
}

geometry::LandmarkSet moved(const geometry::LandmarkSet& lm, double angle, geometry::Point shift) {
    const double c = std::cos(angle), s = std::sin(angle);
    auto f = [&](geometry::Point p) { return geometry::Point{c * p.x - s * p.y + shift.x, s * p.x + c * p.y + shift.y}; };
    auto out = lm;
    for (auto* p : {&out.p_vs, &out.p_vl1, &out.p_vl2, &out.p_vr1, &out.p_vr2}) *p = f(*p);
    return out;
}

void length(Checker& check) {
    geometry::LandmarkSet lm;
    lm.p_vs = {0, 0};
    lm.p_vl1 = {2, 4};
    lm.p_vl2 = {4, 4};
    lm.p_vr1 = {3, -3};
    lm.p_vr2 = {3, -5};
    const double l = geometry::vocal_cord_length(lm).length;
    check(l == 5.0, "3-4-5 fixture gave " + fmt(l));

    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> u(-200, 200), angle(0, 2 * std::numbers::pi), shift(-1000, 1000);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        geometry::LandmarkSet r;
        for (auto* p : {&r.p_vs, &r.p_vl1, &r.p_vl2, &r.p_vr1, &r.p_vr2}) *p = {u(rng), u(rng)};
        const double base = geometry::vocal_cord_length(r).length;
        const double after = geometry::vocal_cord_length(moved(r, angle(rng), {shift(rng), shift(rng)})).length;
        worst = std::max(worst, std::abs(after - base));
    }
    check(worst < 1e-9, "rigid motion changed L by " + fmt(worst));
    check.note = "max drift=" + fmt(worst, 3);
}

void wilcoxon_fdr(Checker& check) {
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    for (int rep = 0; rep < 50; ++rep) {
        const auto n = static_cast<std::size_t>(1 + rep % 12);
        std::vector<double> d(n);
        std::iota(d.begin(), d.end(), 1.0);
        std::shuffle(d.begin(), d.end(), rng);
        std::uniform_real_distribution<double> jitter(0.0, 0.4);
        std::bernoulli_distribution sign(0.5);
        for (auto& v : d) v = (v + jitter(rng)) * (sign(rng) ? 1.0 : -1.0);
        stats::PairedSample s;
        for (double v : d) {
            s.pre.push_back(10.0);
            s.post.push_back(10.0 + v);
        }
        stats::BootstrapOptions boot;
        boot.resamples = 200;
        const auto r = stats::wilcoxon_signed_rank(s, {}, boot);
        check(r.method == stats::PValueMethod::exact, "fixture " + std::to_string(rep) + " not exact");
        worst = std::max(worst, std::abs(r.p_raw - oracle::wilcoxon_enumeration_p(d)));
    }
    check(worst <= 1e-12, "exact p differs from enumeration by " + fmt(worst));

    std::uniform_real_distribution<double> u(0.0, 1.0);
    double bh_worst = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        std::vector<double> p(1 + rep % 20);
        for (auto& v : p) v = u(rng) * (rep % 3 == 0 ? 0.05 : 1.0);
        const auto got = stats::bh_fdr(p);
        const auto want = oracle::bh_step_up(p);
        for (std::size_t i = 0; i < p.size(); ++i) bh_worst = std::max(bh_worst, std::abs(got[i] - want[i]));
    }
    check(bh_worst <= 1e-15, "BH differs from step-up by " + fmt(bh_worst));
    check.note = "max |dp|=" + fmt(worst, 3) + ", max |dq|=" + fmt(bh_worst, 3);
}

void pca(Checker& check) {
    stats::Matrix rank1;
    for (int i = 0; i < 12; ++i) {
        const double t = i * 0.7 - 3.0;
        rank1.push_back({t, 2.0 * t + 1.0});
    }
    const auto r1 = stats::pca(rank1);
    check(std::abs(r1.explained_variance_ratio[0] - 1.0) < 1e-9 && std::abs(r1.explained_variance_ratio[1]) < 1e-9,
          "rank-1 ratios " + fmt(r1.explained_variance_ratio[0]) + ", " + fmt(r1.explained_variance_ratio[1]));

    std::mt19937_64 rng(23);
    std::normal_distribution<double> g;
    double worst = 0.0;
    for (bool standardize : {true, false}) {
        for (int rep = 0; rep < 20; ++rep) {
            stats::Matrix data;
            for (int i = 0; i < 10 + rep; ++i) {
                const double a = g(rng), b = g(rng), c = g(rng);
                data.push_back({3.0 * a + 10.0, a + 0.5 * b, 0.2 * a + b + 2.0 * c});
            }
            const auto res = stats::pca(data, standardize);
            const auto want = oracle::eigen_symmetric(oracle::covariance(data, standardize));
            for (std::size_t k = 0; k < 3; ++k) {
                worst = std::max(worst, std::abs(res.eigenvalues[k] - want.values[k]));
                for (std::size_t j = 0; j < 3; ++j) {
                    worst = std::max(worst, std::abs(res.components[k][j] - want.vectors[k][j]));
                }
                for (std::size_t l = 0; l < 3; ++l) {
                    double dot = 0.0;
                    for (std::size_t j = 0; j < 3; ++j) dot += res.components[k][j] * res.components[l][j];
                    check(std::abs(dot - (k == l ? 1.0 : 0.0)) < 1e-9, "loadings not orthonormal");
                }
            }
        }
    }
    check(worst < 1e-9, "PCA differs from the eigen oracle by " + fmt(worst));
    check.note = "max oracle gap=" + fmt(worst, 3);
}

void pipeline(Checker& check) {
    synth::SessionSpec spec;
    spec.low = "C4";
    spec.high = "C6";
    spec.hold_s = 4.0;  // 15 white keys x 4 s = 60 s
    spec.with_landmarks = false;
    const auto ex = synth::make_session(spec);
    const auto session = fixtures::as_session(ex);
    const auto ref = std::make_shared<const feedback::ReferenceTrace>(feedback::build_reference(session));
    const auto cal = ref->mvc;

    feedback::FeedbackSession engine(ex.manifest);
    auto source = feedback::ReplaySource::from_session(session, 20.0);
    const auto frames = fixtures::replay(engine, ref, source, cal);
    const auto duration = static_cast<double>(ex.emg.length()) / ex.emg.rate_hz();
    check(std::abs(duration - 60.0) < 1e-9, "session is " + fmt(duration) + " s");
    check(frames.size() + 1 >= 1800 && frames.size() <= 1801, std::to_string(frames.size()) + " frames");

    const auto batch = feedback::batch_bins(session, &cal);
    const auto& stream = engine.bins();
    check(stream.size() == batch.size() && batch.size() == 300,
          "bins: stream " + std::to_string(stream.size()) + ", batch " + std::to_string(batch.size()));
    double worst = 0.0;
    auto cmp = [&](const std::optional<double>& a, const std::optional<double>& b, std::size_t k) {
        check(a.has_value() == b.has_value(), "bin " + std::to_string(k) + " presence differs");
        if (a && b) worst = std::max(worst, std::abs(*a - *b));
    };
    for (std::size_t k = 0; k < std::min(stream.size(), batch.size()); ++k) {
        cmp(stream[k].rms_norm, batch[k].rms_norm, k);
        cmp(stream[k].stability_window_db, batch[k].stability_window_db, k);
        cmp(stream[k].envelope_mean, batch[k].envelope_mean, k);
        cmp(stream[k].spr_db, batch[k].spr_db, k);
        cmp(stream[k].f0_hz, batch[k].f0_hz, k);
    }
    check(worst <= 1e-6, "stream/batch gap " + fmt(worst));

    const double cut = 23.37;
    feedback::FeedbackSession partial(ex.manifest);
    auto cut_source = feedback::ReplaySource(ex.emg.slice(0, static_cast<std::size_t>(cut * ex.emg.rate_hz())),
                                             ex.audio->slice(0, static_cast<std::size_t>(cut * ex.audio->rate_hz())), 20.0);
    const auto prefix = fixtures::replay(partial, ref, cut_source, cal);
    check(!prefix.empty() && prefix.size() <= frames.size(), "truncated replay gave no usable prefix");
    for (std::size_t i = 0; i < std::min(prefix.size(), frames.size()); ++i) {
        check(feedback::to_json(prefix[i]) == feedback::to_json(frames[i]), "frame " + std::to_string(i) + " differs after truncation");
    }
    check.note = std::to_string(frames.size()) + " frames, max bin gap=" + fmt(worst, 3) + ", prefix " +
                 std::to_string(prefix.size());
}

void schedule(Checker& check) {
    const auto ev = io::scale_schedule(io::parse_spn("G2"), io::parse_spn("E6"));
    check(ev.size() == 27, std::to_string(ev.size()) + " events");
    for (const auto& e : ev) check(e.end_s - e.start_s == 2.0, e.label.spn + " is not 2.0 s");
    for (std::size_t i = 1; i < ev.size(); ++i) check(ev[i].start_s == ev[i - 1].end_s, "gap before " + ev[i].label.spn);
    for (int m = 0; m <= 127; ++m) {
        const auto label = io::from_midi(m);
        check(io::parse_spn(label.spn).midi == m, "midi " + std::to_string(m) + " does not round-trip");
    }
    check.note = std::to_string(ev.size()) + " events, " + (ev.empty() ? "" : ev.front().label.spn + ".." + ev.back().label.spn);
}

void osf_correlation(Checker& check) {
    const char* path = std::getenv("VOCALIS_OSF_EXPERT_MANIFEST");
    if (!path || !*path) throw Skip{"VOCALIS_OSF_EXPERT_MANIFEST not set"};
    if (!std::filesystem::exists(path)) throw Skip{std::string("no dataset at ") + path};
    const auto report = app::correlate_session(io::load_session(path));
    check(report.overall.has_value(), "correlation not computed: " + report.overall_status);
    if (!report.overall) return;
    const double r = report.overall->r;
    check(r >= 0.70 && r <= 0.80, "r=" + fmt(r, 4) + " outside [0.70, 0.80]");
    check.note = "r=" + fmt(r, 4) + ", n=" + std::to_string(report.overall->n);
}

} // namespace

int main() {
    const std::vector<Criterion> criteria{
        {"stability", 1.0, stability},          {"envelope", 1.0, envelope},
        {"spr", 5.0, spr},                      {"vocal_fold_length", 1.0, length},
        {"wilcoxon_bh_fdr", 30.0, wilcoxon_fdr}, {"pca", 1.0, pca},
        {"pipeline_equivalence", 10.0, pipeline}, {"scale_schedule", 1.0, schedule},
        {"osf_expert_correlation", 60.0, osf_correlation},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        Checker check;
        std::string status = "PASS";
        std::string detail;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.body(check);
            if (!check.ok()) {
                status = "FAIL";
                detail = check.failure();
            } else {
                detail = check.note;
            }
        } catch (const Skip& s) {
            status = "SKIP";
            detail = s.reason;
        } catch (const std::exception& e) {
            status = "FAIL";
            detail = std::string("exception: ") + e.what();
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (status == "PASS" && secs >= c.limit_s) {
            status = "FAIL";
            detail = "took " + fmt(secs, 3) + " s, limit " + fmt(c.limit_s) + " s";
        }
        if (status == "FAIL") ++failed;
        std::cout << status << "  " << std::left << std::setw(24) << c.name << std::right << std::fixed
                  << std::setprecision(3) << std::setw(8) << secs << " s  " << detail << std::defaultfloat << '\n';
    }
    std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria met")) << '\n';
    return failed ? 1 : 0;
}
