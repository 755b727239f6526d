#pragma once

#include "vocalis/error.hpp"
#include "vocalis/io/pitch.hpp"
#include "vocalis/io/text.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

namespace vocalis::io {

enum class Phase { pre, post };
enum class Metric { stability, length, rms, spr };

inline std::string_view to_string(Phase p) { return p == Phase::pre ? "pre" : "post"; }

inline std::string_view to_string(Metric m) {
    switch (m) {
    case Metric::stability: return "stability";
    case Metric::length: return "length";
    case Metric::rms: return "rms";
    case Metric::spr: return "spr";
    }
    return "stability";
}

inline Phase parse_phase(std::string_view s) {
    if (s == "pre") return Phase::pre;
    if (s == "post") return Phase::post;
    fail(ErrorKind::malformed, "unknown phase '" + std::string(s) + "' (expected pre or post)");
}

inline Metric parse_metric(std::string_view s) {
    if (s == "stability") return Metric::stability;
    if (s == "length") return Metric::length;
    if (s == "rms") return Metric::rms;
    if (s == "spr") return Metric::spr;
    fail(ErrorKind::malformed, "unknown metric '" + std::string(s) + "'");
}

struct FeatureRow {
    std::string participant;
    PitchLabel pitch;
    Phase phase = Phase::pre;
    Metric metric = Metric::stability;
    double value = 0.0;
    std::string group;
    std::string gender;
    std::optional<int> order;
};

// Long-format feature table keyed by (participant, pitch, phase, metric).
class FeatureTable {
public:
    using Key = std::tuple<std::string, int, Phase, Metric>;

    void add(FeatureRow row) {
        require(std::isfinite(row.value), ErrorKind::invalid_argument,
                "non-finite value for " + row.participant + "/" + row.pitch.spn);
        Key key{row.participant, row.pitch.midi, row.phase, row.metric};
        if (rows_.count(key)) {
            fail(ErrorKind::invalid_argument, "duplicate feature key (" + row.participant + ", " + row.pitch.spn + ", " +
                                                  std::string(to_string(row.phase)) + ", " +
                                                  std::string(to_string(row.metric)) + ")");
        }
        rows_.emplace(std::move(key), std::move(row));
    }

    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }

    const FeatureRow* find(const std::string& participant, int midi, Phase phase, Metric metric) const {
        const auto it = rows_.find(Key{participant, midi, phase, metric});
        return it == rows_.end() ? nullptr : &it->second;
    }

    // Sorted by participant, pitch (midi), phase (pre first), metric.
    std::vector<const FeatureRow*> rows() const {
        std::vector<const FeatureRow*> out;
        out.reserve(rows_.size());
        for (const auto& [key, row] : rows_) out.push_back(&row);
        return out;
    }

private:
    std::map<Key, FeatureRow> rows_;
};

inline constexpr const char* kFeatureColumns = "participant,group,gender,order,pitch,midi,phase,metric,value";

inline std::size_t export_features(const FeatureTable& table, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) fail(ErrorKind::io, "cannot write " + path.string());
    out << kFeatureColumns << '\n';
    std::size_t n = 0;
    for (const auto* row : table.rows()) {
        out << csv_field(row->participant) << ',' << csv_field(row->group) << ',' << csv_field(row->gender) << ','
            << (row->order ? std::to_string(*row->order) : std::string()) << ',' << row->pitch.spn << ','
            << row->pitch.midi << ',' << to_string(row->phase) << ',' << to_string(row->metric) << ','
            << format_double(row->value) << '\n';
        ++n;
    }
    if (!out) fail(ErrorKind::io, "write failed for " + path.string());
    return n;
}

inline FeatureTable read_features(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::missing_file, "cannot open feature table " + path.string());
    std::string line;
    if (!std::getline(in, line) || trim(line) != kFeatureColumns) {
        fail(ErrorKind::malformed, path.string() + ": unexpected feature table header");
    }
    FeatureTable table;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto cells = parse_csv_line(line);
        const auto where = path.string() + ":" + std::to_string(line_no);
        if (cells.size() != 9) fail(ErrorKind::malformed, where + ": expected 9 columns");
        FeatureRow row;
        row.participant = cells[0];
        row.group = cells[1];
        row.gender = cells[2];
        if (!cells[3].empty()) row.order = static_cast<int>(parse_double(cells[3], where));
        row.pitch = parse_spn(cells[4]);
        row.phase = parse_phase(cells[6]);
        row.metric = parse_metric(cells[7]);
        row.value = parse_double(cells[8], where);
        table.add(std::move(row));
    }
    return table;
}

} // namespace vocalis::io
