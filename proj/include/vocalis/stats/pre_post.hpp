#pragma once

#include "vocalis/io/features.hpp"
#include "vocalis/stats/fdr.hpp"
#include "vocalis/stats/wilcoxon.hpp"

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace vocalis::stats {

enum class PitchTestStatus { ok, insufficient_data, degenerate };

inline std::string_view to_string(PitchTestStatus s) {
    switch (s) {
    case PitchTestStatus::ok: return "ok";
    case PitchTestStatus::insufficient_data: return "insufficient data";
    case PitchTestStatus::degenerate: return "degenerate";
    }
    return "ok";
}

struct PitchTest {
    io::PitchLabel pitch;
    PitchTestStatus status = PitchTestStatus::ok;
    std::optional<TestResult> result;
    std::size_t complete_pairs = 0;
    std::vector<std::string> excluded;  // participants missing one phase
};

struct PrePostReport {
    io::Metric metric = io::Metric::stability;
    std::vector<PitchTest> tests;  // in the requested pitch order
    std::size_t family_size = 0;   // number of pitches entering the FDR family
};

struct PrePostOptions {
    WilcoxonOptions wilcoxon;
    BootstrapOptions bootstrap;
    std::size_t min_pairs = 2;
};

// Paired pre/post signed-rank test per pitch, BH-adjusted across the pitches
// that produced a test. An empty `pitches` list means every pitch present.
inline PrePostReport pre_post_per_pitch(const io::FeatureTable& table, io::Metric metric,
                                        std::vector<io::PitchLabel> pitches, const PrePostOptions& opts = {}) {
    // participant -> midi -> (pre, post)
    std::map<int, std::map<std::string, std::pair<std::optional<double>, std::optional<double>>>> cells;
    std::map<int, io::PitchLabel> labels;
    for (const auto* row : table.rows()) {
        if (row->metric != metric) continue;
        auto& cell = cells[row->pitch.midi][row->participant];
        (row->phase == io::Phase::pre ? cell.first : cell.second) = row->value;
        labels.emplace(row->pitch.midi, row->pitch);
    }
    if (pitches.empty()) {
        for (const auto& [midi, label] : labels) pitches.push_back(label);
    }

    PrePostReport report;
    report.metric = metric;
    std::vector<double> raw;
    std::vector<std::size_t> tested;
    for (const auto& pitch : pitches) {
        PitchTest t;
        t.pitch = pitch;
        PairedSample sample;
        if (const auto it = cells.find(pitch.midi); it != cells.end()) {
            for (const auto& [participant, pair] : it->second) {
                if (pair.first && pair.second) {
                    sample.pre.push_back(*pair.first);
                    sample.post.push_back(*pair.second);
                    sample.labels.push_back(participant);
                } else {
                    t.excluded.push_back(participant);
                }
            }
        }
        t.complete_pairs = sample.pre.size();
        if (t.complete_pairs < opts.min_pairs) {
            t.status = PitchTestStatus::insufficient_data;
        } else {
            try {
                auto result = wilcoxon_signed_rank(sample, opts.wilcoxon, opts.bootstrap);
                try {
                    result.effect_d = cohens_d(sample.pre, sample.post);
                } catch (const Error&) {
                    // zero SD of differences: d undefined, test still valid
                }
                t.result = result;
                raw.push_back(result.p_raw);
                tested.push_back(report.tests.size());
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::degenerate) throw;
                t.status = PitchTestStatus::degenerate;
            }
        }
        report.tests.push_back(std::move(t));
    }
    const auto adjusted = bh_fdr(raw);
    for (std::size_t i = 0; i < tested.size(); ++i) report.tests[tested[i]].result->p_fdr = adjusted[i];
    report.family_size = tested.size();
    return report;
}

} // namespace vocalis::stats
