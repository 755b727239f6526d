#pragma once

#include "vocalis/error.hpp"
#include "vocalis/service/live.hpp"
#include "vocalis/stats/wilcoxon.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

namespace vocalis::app {

// One JSON document configures every verb; command-line flags override it.
//
//   {
//     "grid_ms": 200, "window_ms": 1000, "seed": 20240917,
//     "bootstrap_resamples": 10000, "metric": "stability",
//     "port": 8080, "address": "127.0.0.1", "reference_dir": "references",
//     "tick_hz": 30, "replay_speed": 1.0, "chunk_ms": 20
//   }
struct AppConfig {
    double grid_ms = 200.0;
    std::optional<double> window_ms;  // verb-specific default when unset
    std::uint64_t seed = stats::kDefaultBootstrapSeed;
    std::size_t bootstrap_resamples = 10000;
    std::string metric = "stability";
    service::ServiceConfig service;
    std::optional<std::filesystem::path> source;  // file the values came from
};

inline AppConfig config_from_json(const nlohmann::json& j) {
    AppConfig c;
    try {
        require(j.is_object(), ErrorKind::malformed, "config must be a JSON object");
        if (j.contains("grid_ms")) c.grid_ms = j["grid_ms"].get<double>();
        if (j.contains("window_ms")) c.window_ms = j["window_ms"].get<double>();
        if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("bootstrap_resamples")) c.bootstrap_resamples = j["bootstrap_resamples"].get<std::size_t>();
        if (j.contains("metric")) c.metric = j["metric"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::malformed, std::string("invalid config: ") + e.what());
    }
    c.service = service::service_config_from_json(j);
    return c;
}

inline AppConfig read_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::missing_file, "cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorKind::malformed, path.string() + ": invalid config JSON: " + e.what());
    }
    auto c = config_from_json(j);
    c.source = path;
    return c;
}

// --config wins over VOCALIS_CONFIG; neither means defaults.
inline AppConfig load_config(const std::optional<std::string>& flag) {
    if (flag && !flag->empty()) return read_config(*flag);
    if (const char* env = std::getenv("VOCALIS_CONFIG"); env && *env) return read_config(env);
    return {};
}

} // namespace vocalis::app
