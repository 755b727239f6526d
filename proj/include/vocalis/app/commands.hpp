#pragma once

#include "vocalis/app/analysis.hpp"
#include "vocalis/app/diagnostics.hpp"
#include "vocalis/feedback/reference.hpp"
#include "vocalis/io/features.hpp"
#include "vocalis/io/text.hpp"
#include "vocalis/stats/pca.hpp"
#include "vocalis/stats/pre_post.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace vocalis::app {

namespace fs = std::filesystem;

enum ExitCode : int { exit_ok = 0, exit_input = 1, exit_computation = 2 };

inline int exit_code_for(const Error& e) { return e.is_input_error() ? exit_input : exit_computation; }

namespace detail {

inline std::ofstream open_out(const fs::path& path) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    return out;
}

inline std::string num(const std::optional<double>& v) { return v ? io::format_double(*v) : std::string(); }

inline void write_json(const fs::path& path, const nlohmann::json& j) {
    auto out = open_out(path);
    out << j.dump(2) << '\n';
}

inline nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }

} // namespace detail

// ---- analyze ---------------------------------------------------------------

struct AnalyzeOptions {
    std::vector<fs::path> sessions;
    fs::path out_dir = ".";
    AnalysisOptions analysis;
};

struct AnalyzeResult {
    std::vector<SessionAnalysis> sessions;
    std::size_t failed = 0;
    int exit = exit_ok;
    std::size_t feature_rows = 0;
};

inline AnalyzeResult cmd_analyze(const AnalyzeOptions& opts, Diagnostics& diag) {
    require(!opts.sessions.empty(), ErrorKind::invalid_argument, "no sessions given");
    AnalyzeResult result;
    for (const auto& path : opts.sessions) {
        try {
            const auto session = io::load_session(path);
            auto a = analyze_session(session, opts.analysis);
            for (const auto& w : a.warnings) diag.warning(w, {{"file", path.string()}});
            result.sessions.push_back(std::move(a));
        } catch (const Error& e) {
            diag.error(e, {{"file", path.string()}});
            ++result.failed;
            result.exit = std::max(result.exit, exit_code_for(e));
        }
    }

    auto stability = detail::open_out(opts.out_dir / "stability.csv");
    stability << "participant,session,pitch,midi,start_s,end_s,stability_db,truncated\n";
    auto spr = detail::open_out(opts.out_dir / "spr.csv");
    spr << "participant,session,pitch,midi,start_s,end_s,segment_db,frames\n";
    auto spr_series = detail::open_out(opts.out_dir / "spr_series.csv");
    spr_series << "participant,session,pitch,midi,t_s,spr_db\n";
    auto rms = detail::open_out(opts.out_dir / "rms.csv");
    rms << "participant,session,t_s,rms_norm,pitch\n";
    auto length = detail::open_out(opts.out_dir / "length.csv");
    length << "participant,session,pitch,midi,mean,sd,count,under_annotated\n";

    io::FeatureTable features;
    auto summary_sessions = nlohmann::json::array();
    for (const auto& a : result.sessions) {
        const auto& m = a.manifest;
        const auto who = io::csv_field(m.participant_id) + "," + io::csv_field(m.session_id);
        for (const auto& p : a.pitches) {
            const auto& l = p.event.label;
            const auto key = who + "," + l.spn + "," + std::to_string(l.midi);
            const auto span = io::format_double(p.event.start_s) + "," + io::format_double(p.event.end_s);
            stability << key << "," << span << "," << detail::num(p.stability_db) << "," << (p.truncated ? 1 : 0) << "\n";
            if (m.modalities.count(io::Modality::audio)) {
                spr << key << "," << span << "," << detail::num(p.spr_db) << "," << p.spr_frames << "\n";
            }
            for (const auto& tv : p.spr_series) {
                spr_series << key << "," << io::format_double(tv.t_s) << "," << io::format_double(tv.value) << "\n";
            }
        }
        if (a.rms) {
            for (std::size_t w = 0; w < a.rms->values.size(); ++w) {
                const double t = a.rms->times_s[w];
                const auto* ev = io::event_at(m.pitch_events, t);
                rms << who << "," << io::format_double(t) << "," << io::format_double(a.rms->values[w]) << ","
                    << (ev ? ev->label.spn : "") << "\n";
            }
        }
        for (const auto& l : a.lengths) {
            length << who << "," << l.pitch << "," << io::parse_spn(l.pitch).midi << "," << io::format_double(l.mean) << ","
                   << detail::num(l.sd) << "," << l.count << "," << (l.under_annotated ? 1 : 0) << "\n";
        }
        try {
            add_features(features, a);
        } catch (const Error& e) {
            diag.error(e, {{"participant", m.participant_id}});
            ++result.failed;
            result.exit = std::max(result.exit, exit_code_for(e));
        }
        nlohmann::json s{{"participant_id", m.participant_id}, {"session_id", m.session_id},
                         {"pitches", a.pitches.size()}, {"warnings", a.warnings}};
        if (a.mvc) {
            s["mvc"] = {{"mvc_amplitude", a.mvc->mvc_amplitude}, {"baseline_noise", a.mvc->baseline_noise},
                        {"source", a.mvc_source}, {"rest_detected", a.mvc->rest_detected}};
        }
        auto per_pitch = nlohmann::json::array();
        for (const auto& p : a.pitches) {
            per_pitch.push_back({{"pitch", p.event.label.spn},
                                 {"stability_db", detail::opt(p.stability_db)},
                                 {"stability_per_channel_db", p.stability_per_channel},
                                 {"rms_norm_mean", detail::opt(p.rms_norm_mean)},
                                 {"spr_db", detail::opt(p.spr_db)},
                                 {"truncated", p.truncated}});
        }
        s["per_pitch"] = per_pitch;
        summary_sessions.push_back(s);
    }
    result.feature_rows = io::export_features(features, opts.out_dir / "features.csv");
    detail::write_json(opts.out_dir / "summary.json",
                       {{"sessions", summary_sessions},
                        {"failed", result.failed},
                        {"feature_rows", result.feature_rows},
                        {"grid_ms", opts.analysis.grid_ms},
                        {"rms_window_ms", opts.analysis.rms_window_ms},
                        {"files", {"stability.csv", "length.csv", "spr.csv", "spr_series.csv", "rms.csv", "features.csv"}}});
    return result;
}

// ---- compare ---------------------------------------------------------------

// Manifests below `dir`: any *.json carrying schema_version and participant_id.
inline std::vector<fs::path> find_manifests(const fs::path& dir) {
    require(fs::is_directory(dir), ErrorKind::missing_file, "not a directory: " + dir.string());
    std::vector<fs::path> out;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        std::ifstream in(entry.path());
        const auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_object() && j.contains("schema_version") && j.contains("participant_id")) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

struct CompareOptions {
    fs::path pre_dir;
    fs::path post_dir;
    std::vector<std::string> pitches;  // empty: every pitch present
    io::Metric metric = io::Metric::stability;
    fs::path out_dir = ".";
    AnalysisOptions analysis;
    stats::PrePostOptions prepost;
};

struct CompareResult {
    stats::PrePostReport report;
    std::vector<std::string> unmatched;
    std::size_t failed = 0;
    int exit = exit_ok;
};

inline CompareResult cmd_compare(const CompareOptions& opts, Diagnostics& diag) {
    CompareResult result;
    std::vector<io::PitchLabel> pitches;
    for (const auto& p : opts.pitches) pitches.push_back(io::parse_spn(p));
    io::FeatureTable table;
    std::map<std::string, std::set<io::Phase>> seen;
    for (auto [dir, phase] : {std::pair{opts.pre_dir, io::Phase::pre}, std::pair{opts.post_dir, io::Phase::post}}) {
        const auto manifests = find_manifests(dir);
        if (manifests.empty()) diag.warning("no session manifests found", {{"dir", dir.string()}});
        for (const auto& path : manifests) {
            try {
                const auto session = io::load_session(path);
                const auto& id = session.manifest().participant_id;
                if (seen[id].count(phase)) {
                    fail(ErrorKind::invalid_argument, "participant " + id + " appears twice in " + dir.string());
                }
                seen[id].insert(phase);
                add_features(table, analyze_session(session, opts.analysis), phase);
            } catch (const Error& e) {
                diag.error(e, {{"file", path.string()}});
                ++result.failed;
                result.exit = std::max(result.exit, exit_code_for(e));
            result.exit = std::max(result.exit, exit_code_for(e));
            }
        }
    }
    for (const auto& [id, phases] : seen) {
        if (phases.size() < 2) {
            result.unmatched.push_back(id);
            diag.warning("participant " + id + " has no " + (phases.count(io::Phase::pre) ? "post" : "pre") +
                             " session; excluded",
                         {{"participant", id}});
        }
    }
    result.report = stats::pre_post_per_pitch(table, opts.metric, pitches, opts.prepost);

    auto csv = detail::open_out(opts.out_dir / "compare.csv");
    csv << "pitch,midi,status,pairs,n_effective,n_zero_dropped,ties,method,W,w_plus,w_minus,p_raw,p_fdr,r_rb,ci_low,ci_high\n";
    auto rows = nlohmann::json::array();
    for (const auto& t : result.report.tests) {
        nlohmann::json row{{"pitch", t.pitch.spn}, {"midi", t.pitch.midi}, {"status", std::string(to_string(t.status))},
                           {"pairs", t.complete_pairs}, {"excluded", t.excluded}};
        csv << t.pitch.spn << "," << t.pitch.midi << "," << to_string(t.status) << "," << t.complete_pairs << ",";
        if (t.result) {
            const auto& r = *t.result;
            row.update({{"W", r.statistic_w}, {"w_plus", r.w_plus}, {"w_minus", r.w_minus}, {"p_raw", r.p_raw},
                        {"p_fdr", detail::opt(r.p_fdr)}, {"r_rb", r.effect_r_rb}, {"ci_low", r.ci_low},
                        {"ci_high", r.ci_high}, {"n_effective", r.n_effective}, {"n_zero_dropped", r.n_zero_dropped},
                        {"ties", r.ties}, {"method", std::string(to_string(r.method))}});
            if (r.effect_d) row["cohens_d"] = *r.effect_d;
            csv << r.n_effective << "," << r.n_zero_dropped << "," << (r.ties ? 1 : 0) << "," << to_string(r.method) << ","
                << io::format_double(r.statistic_w) << "," << io::format_double(r.w_plus) << ","
                << io::format_double(r.w_minus) << "," << io::format_double(r.p_raw) << "," << detail::num(r.p_fdr) << ","
                << io::format_double(r.effect_r_rb) << "," << io::format_double(r.ci_low) << ","
                << io::format_double(r.ci_high) << "\n";
        } else {
            csv << ",,,,,,,,,,,\n";
        }
        rows.push_back(row);
    }
    detail::write_json(opts.out_dir / "compare.json",
                       {{"metric", std::string(io::to_string(opts.metric))},
                        {"test", "Wilcoxon signed-rank, two-sided, zero differences dropped, tie-corrected normal "
                                 "approximation above the exact limit"},
                        {"exact_max_n", opts.prepost.wilcoxon.exact_max_n},
                        {"fdr", "Benjamini-Hochberg"},
                        {"family_size", result.report.family_size},
                        {"bootstrap", {{"resamples", opts.prepost.bootstrap.resamples},
                                       {"seed", opts.prepost.bootstrap.seed},
                                       {"level", opts.prepost.bootstrap.level}}},
                        {"unmatched", result.unmatched},
                        {"pitches", rows}});
    return result;
}

// ---- correlate -------------------------------------------------------------

struct CorrelateOptions {
    fs::path session;
    fs::path out_dir = ".";
    AnalysisOptions analysis;
};

inline nlohmann::json to_json(const CorrelationReport& r) {
    auto res = [](const std::optional<stats::CorrelationResult>& c, const std::string& status) {
        nlohmann::json j{{"status", status}};
        if (c) j.update({{"r", c->r}, {"p", c->p}, {"n", c->n}});
        return j;
    };
    auto notes = nlohmann::json::array();
    for (const auto& n : r.notes) {
        auto j = res(n.result, n.status);
        j["pitch"] = n.event.label.spn;
        j["start_s"] = n.event.start_s;
        j["end_s"] = n.event.end_s;
        j["bins"] = n.bins;
        notes.push_back(j);
    }
    return {{"participant_id", r.participant_id}, {"grid_ms", r.grid_ms}, {"overall", res(r.overall, r.overall_status)},
            {"notes", notes}};
}

inline CorrelationReport cmd_correlate(const CorrelateOptions& opts, Diagnostics& diag) {
    const auto session = io::load_session(opts.session);
    auto report = correlate_session(session, opts.analysis);
    if (!report.overall) diag.warning("overall correlation not computed: " + report.overall_status);
    auto csv = detail::open_out(opts.out_dir / "correlation_grid.csv");
    csv << "participant,t_s,rms_norm,spr_db,in_note\n";
    for (std::size_t i = 0; i < report.bin_start_s.size(); ++i) {
        csv << io::csv_field(report.participant_id) << "," << io::format_double(report.bin_start_s[i]) << ","
            << io::format_double(report.rms[i]) << "," << io::format_double(report.spr[i]) << ","
            << (report.in_note[i] ? 1 : 0) << "\n";
    }
    detail::write_json(opts.out_dir / "correlation.json", to_json(report));
    return report;
}

// ---- pca -------------------------------------------------------------------

struct PcaOptions {
    fs::path features;
    std::vector<std::string> columns{"PerAb", "SinAb", "RMS Mean"};
    std::string id_column = "participant";
    std::vector<std::string> exclude;
    bool standardize = true;
    fs::path out_dir = ".";
};

struct PcaReport {
    std::vector<std::string> ids;
    std::vector<std::string> excluded;
    stats::PcaResult result;
};

// Wide table: one row per participant, one column per feature.
inline PcaReport cmd_pca(const PcaOptions& opts, Diagnostics& diag) {
    std::ifstream in(opts.features);
    if (!in) fail(ErrorKind::missing_file, "cannot open " + opts.features.string());
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorKind::malformed, opts.features.string() + ": empty file");
    const auto header = io::parse_csv_line(line);
    auto index_of = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (io::trim(header[i]) == name) return i;
        }
        return std::nullopt;
    };
    std::vector<std::size_t> cols;
    for (const auto& c : opts.columns) {
        const auto i = index_of(c);
        if (!i) fail(ErrorKind::invalid_argument, opts.features.string() + ": no column '" + c + "'");
        cols.push_back(*i);
    }
    const auto id_col = index_of(opts.id_column);
    PcaReport report;
    stats::Matrix data;
    std::size_t row_no = 1;
    while (std::getline(in, line)) {
        ++row_no;
        if (io::trim(line).empty()) continue;
        const auto fields = io::parse_csv_line(line);
        const auto id = id_col && *id_col < fields.size() ? std::string(io::trim(fields[*id_col]))
                                                          : "row" + std::to_string(row_no);
        if (std::find(opts.exclude.begin(), opts.exclude.end(), id) != opts.exclude.end()) {
            report.excluded.push_back(id);
            continue;
        }
        std::vector<double> row;
        for (const auto c : cols) {
            double v = 0.0;
            if (c >= fields.size() || !io::try_parse_double(io::trim(fields[c]), v) || !std::isfinite(v)) break;
            row.push_back(v);
        }
        if (row.size() != cols.size()) {
            diag.warning("row " + id + " has missing or non-numeric values; excluded", {{"row", row_no}});
            report.excluded.push_back(id);
            continue;
        }
        report.ids.push_back(id);
        data.push_back(std::move(row));
    }
    report.result = stats::pca(data, opts.standardize);
    const auto& r = report.result;

    auto loadings = nlohmann::json::array();
    auto lcsv = detail::open_out(opts.out_dir / "pca_loadings.csv");
    lcsv << "component,eigenvalue,explained_variance_ratio";
    for (const auto& c : opts.columns) lcsv << "," << io::csv_field(c);
    lcsv << "\n";
    for (std::size_t k = 0; k < r.components.size(); ++k) {
        nlohmann::json l = nlohmann::json::object();
        lcsv << "PC" << k + 1 << "," << io::format_double(r.eigenvalues[k]) << ","
             << io::format_double(r.explained_variance_ratio[k]);
        for (std::size_t j = 0; j < opts.columns.size(); ++j) {
            l[opts.columns[j]] = r.components[k][j];
            lcsv << "," << io::format_double(r.components[k][j]);
        }
        lcsv << "\n";
        loadings.push_back(l);
    }
    auto scsv = detail::open_out(opts.out_dir / "pca_scores.csv");
    scsv << io::csv_field(opts.id_column);
    for (std::size_t k = 0; k < r.components.size(); ++k) scsv << ",PC" << k + 1;
    scsv << "\n";
    auto scores = nlohmann::json::object();
    for (std::size_t i = 0; i < report.ids.size(); ++i) {
        scsv << io::csv_field(report.ids[i]);
        for (double s : r.scores[i]) scsv << "," << io::format_double(s);
        scsv << "\n";
        scores[report.ids[i]] = r.scores[i];
    }
    detail::write_json(opts.out_dir / "pca.json", {{"columns", opts.columns},
                                                   {"standardized", r.standardized},
                                                   {"n", report.ids.size()},
                                                   {"excluded", report.excluded},
                                                   {"eigenvalues", r.eigenvalues},
                                                   {"explained_variance_ratio", r.explained_variance_ratio},
                                                   {"loadings", loadings},
                                                   {"means", r.means},
                                                   {"scales", r.scales},
                                                   {"scores", scores}});
    return report;
}

// ---- build-reference -------------------------------------------------------

struct BuildReferenceOptions {
    fs::path session;
    fs::path out;
    feedback::KernelConfig kernel;
};

inline feedback::ReferenceTrace cmd_build_reference(const BuildReferenceOptions& opts, Diagnostics& diag) {
    const auto session = io::load_session(opts.session);
    auto ref = feedback::build_reference(session, opts.kernel);
    if (ref.mvc_source == "self") diag.warning("no calibration recording or manifest MVC; self-calibrated from the session");
    std::size_t carried = 0;
    for (const auto& b : ref.bins) carried += b.carried;
    if (carried) diag.info(std::to_string(carried) + " bins carry values forward", {{"carried_bins", carried}});
    if (opts.out.has_parent_path()) fs::create_directories(opts.out.parent_path());
    feedback::write_reference(opts.out, ref);
    return ref;
}

} // namespace vocalis::app
