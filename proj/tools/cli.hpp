#pragma once

#include "vocalis/app/commands.hpp"
#include "vocalis/app/config.hpp"
#include "vocalis/service/server.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace vocalis::cli {

namespace fs = std::filesystem;
using app::Diagnostics;

struct GlobalFlags {
    std::optional<double> grid_ms;
    std::optional<double> window_ms;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> config;
};

// Flags override the config file, which overrides built-in defaults.
inline app::AppConfig resolve(const GlobalFlags& g) {
    auto c = app::load_config(g.config);
    if (g.grid_ms) c.grid_ms = *g.grid_ms;
    if (g.window_ms) c.window_ms = *g.window_ms;
    if (g.seed) c.seed = *g.seed;
    require(c.grid_ms > 0.0 && std::isfinite(c.grid_ms), ErrorKind::invalid_argument, "--grid-ms must be positive");
    require(!c.window_ms || (*c.window_ms > 0.0 && std::isfinite(*c.window_ms)), ErrorKind::invalid_argument,
            "--window-ms must be positive");
    c.service.grid_ms = c.grid_ms;
    if (c.window_ms) c.service.window_ms = *c.window_ms;
    c.service.seed = c.seed;
    return c;
}

inline app::AnalysisOptions analysis_options(const app::AppConfig& c) {
    app::AnalysisOptions a;
    a.grid_ms = c.grid_ms;
    a.rms_window_ms = c.window_ms.value_or(c.grid_ms);
    return a;
}

inline feedback::KernelConfig kernel_config(const app::AppConfig& c) {
    feedback::KernelConfig k;
    k.grid_ms = c.grid_ms;
    if (c.window_ms) k.window_ms = *c.window_ms;
    k.validate();
    return k;
}

// Runs one invocation. Results go to `out` as JSON, diagnostics to `err` as JSON lines.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App cli{"Vocal-training analysis and real-time feedback", "vocalis"};
    cli.fallthrough();
    cli.require_subcommand(1);
    GlobalFlags g;
    cli.add_option("--grid-ms", g.grid_ms, "Analysis grid in ms (default 200)");
    cli.add_option("--window-ms", g.window_ms,
                   "RMS window for analyze/correlate (default: grid); stability window for build-reference/serve "
                   "(default 1000)");
    cli.add_option("--seed", g.seed, "Bootstrap seed");
    cli.add_option("--config", g.config, "JSON config file (fallback: $VOCALIS_CONFIG)");

    auto* analyze = cli.add_subcommand("analyze", "Per-pitch metrics and plot-ready tables for sessions");
    std::vector<std::string> sessions;
    std::string out_dir = ".";
    analyze->add_option("manifests", sessions, "Session manifest files")->required();
    analyze->add_option("-o,--out", out_dir, "Output directory");

    auto* compare = cli.add_subcommand("compare", "Paired pre/post tests per pitch with FDR control");
    std::string pre_dir, post_dir, metric;
    std::vector<std::string> pitches;
    compare->add_option("pre", pre_dir, "Directory of pre-training manifests")->required();
    compare->add_option("post", post_dir, "Directory of post-training manifests")->required();
    compare->add_option("--metric", metric, "stability | length | rms | spr");
    compare->add_option("--pitches", pitches, "Pitches to test (default: all)")->delimiter(',');
    compare->add_option("-o,--out", out_dir, "Output directory");

    auto* correlate = cli.add_subcommand("correlate", "EMG RMS against singing power ratio on the grid");
    std::string session;
    correlate->add_option("manifest", session, "Session manifest")->required();
    correlate->add_option("-o,--out", out_dir, "Output directory");

    auto* pca = cli.add_subcommand("pca", "Principal components over a wide feature table");
    std::string features;
    app::PcaOptions pca_opts;
    bool raw = false;
    pca->add_option("features", features, "CSV, one row per participant")->required();
    pca->add_option("--columns", pca_opts.columns, "Feature columns")->delimiter(',');
    pca->add_option("--id-column", pca_opts.id_column, "Row identifier column");
    pca->add_option("--exclude", pca_opts.exclude, "Row ids to leave out")->delimiter(',');
    pca->add_flag("--no-standardize", raw, "Centre only");
    pca->add_option("-o,--out", out_dir, "Output directory");

    auto* build = cli.add_subcommand("build-reference", "Expert reference trace for live feedback");
    std::string reference_out;
    build->add_option("manifest", session, "Expert session manifest")->required();
    build->add_option("-o,--out", reference_out, "Reference JSON path")->required();

    auto* serve = cli.add_subcommand("serve", "Live feedback service (HTTP + WebSocket)");
    std::optional<unsigned short> port;
    std::optional<std::string> address, reference_dir;
    std::optional<double> replay_speed;
    serve->add_option("--port", port, "Listen port (0 picks one)");
    serve->add_option("--address", address, "Listen address");
    serve->add_option("--references", reference_dir, "Reference directory");
    serve->add_option("--replay-speed", replay_speed, "Replay speed multiplier, 0 = unthrottled");

    std::string command = "vocalis";
    try {
        cli.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << cli.help();
        return app::exit_ok;
    } catch (const CLI::ParseError& e) {
        for (auto* sub : cli.get_subcommands()) command = sub->get_name();
        Diagnostics(err, command).emit("error", e.what(), {{"kind", "usage"}});
        return app::exit_input;
    }
    command = cli.get_subcommands().front()->get_name();
    Diagnostics diag(err, command);

    try {
        const auto cfg = resolve(g);
        if (cfg.source) diag.info("config loaded", {{"path", cfg.source->string()}});

        if (*analyze) {
            app::AnalyzeOptions o;
            o.sessions.assign(sessions.begin(), sessions.end());
            o.out_dir = out_dir;
            o.analysis = analysis_options(cfg);
            const auto r = app::cmd_analyze(o, diag);
            out << nlohmann::json{{"sessions", r.sessions.size()}, {"failed", r.failed},
                                  {"feature_rows", r.feature_rows}, {"out", out_dir}}
                       .dump()
                << '\n';
            return r.exit;
        }
        if (*compare) {
            app::CompareOptions o;
            o.pre_dir = pre_dir;
            o.post_dir = post_dir;
            o.pitches = pitches;
            o.metric = io::parse_metric(metric.empty() ? cfg.metric : metric);
            o.out_dir = out_dir;
            o.analysis = analysis_options(cfg);
            o.prepost.bootstrap.seed = cfg.seed;
            o.prepost.bootstrap.resamples = cfg.bootstrap_resamples;
            const auto r = app::cmd_compare(o, diag);
            std::size_t tested = 0;
            for (const auto& t : r.report.tests) tested += t.result.has_value();
            out << nlohmann::json{{"pitches", r.report.tests.size()}, {"tested", tested},
                                  {"unmatched", r.unmatched}, {"out", out_dir}}
                       .dump()
                << '\n';
            return r.exit;
        }
        if (*correlate) {
            app::CorrelateOptions o;
            o.session = session;
            o.out_dir = out_dir;
            o.analysis = analysis_options(cfg);
            out << app::to_json(app::cmd_correlate(o, diag)).dump() << '\n';
            return app::exit_ok;
        }
        if (*pca) {
            pca_opts.features = features;
            pca_opts.standardize = !raw;
            pca_opts.out_dir = out_dir;
            const auto r = app::cmd_pca(pca_opts, diag);
            out << nlohmann::json{{"n", r.ids.size()},
                                  {"excluded", r.excluded},
                                  {"explained_variance_ratio", r.result.explained_variance_ratio}}
                       .dump()
                << '\n';
            return app::exit_ok;
        }
        if (*build) {
            app::BuildReferenceOptions o;
            o.session = session;
            o.out = reference_out;
            o.kernel = kernel_config(cfg);
            const auto ref = app::cmd_build_reference(o, diag);
            out << nlohmann::json{{"reference", reference_out}, {"bins", ref.bins.size()},
                                  {"participant_id", ref.participant_id}, {"mvc_source", ref.mvc_source}}
                       .dump()
                << '\n';
            return app::exit_ok;
        }
        if (*serve) {
            auto s = cfg.service;
            if (port) s.port = *port;
            if (address) s.address = *address;
            if (reference_dir) s.reference_dir = *reference_dir;
            if (replay_speed) {
                require(*replay_speed >= 0.0, ErrorKind::invalid_argument, "--replay-speed must be >= 0");
                s.replay_speed = *replay_speed;
            }
            service::Server server(s);
            server.start();
            out << nlohmann::json{{"listening", s.address}, {"port", server.port()},
                                  {"references", server.registry().references().ids()}}
                       .dump()
                << std::endl;
            server.wait_for_signal();
            server.stop();
            diag.info("stopped");
            return app::exit_ok;
        }
    } catch (const Error& e) {
        diag.error(e);
        return app::exit_code_for(e);
    } catch (const fs::filesystem_error& e) {
        diag.emit("error", e.what(), {{"kind", "io"}});
        return app::exit_input;
    } catch (const std::exception& e) {
        diag.emit("error", e.what(), {{"kind", "internal"}});
        return app::exit_computation;
    }
    return app::exit_input;
}

} // namespace vocalis::cli
