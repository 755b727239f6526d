#pragma once

#include "vocalis/error.hpp"

#include <nlohmann/json.hpp>

#include <mutex>
#include <ostream>
#include <string>

namespace vocalis::app {

// Machine-readable diagnostics, one JSON object per line.
class Diagnostics {
public:
    Diagnostics(std::ostream& out, std::string command) : out_(out), command_(std::move(command)) {}

    void emit(const std::string& level, const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
        extra["level"] = level;
        extra["command"] = command_;
        extra["message"] = message;
        std::lock_guard lock(mutex_);
        out_ << extra.dump() << '\n';
        out_.flush();
        if (level == "error") ++errors_;
        if (level == "warning") ++warnings_;
    }

    void info(const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
        emit("info", message, std::move(extra));
    }
    void warning(const std::string& message, nlohmann::json extra = nlohmann::json::object()) {
        emit("warning", message, std::move(extra));
    }
    void error(const Error& e, nlohmann::json extra = nlohmann::json::object()) {
        extra["kind"] = std::string(to_string(e.kind()));
        emit("error", e.what(), std::move(extra));
    }

    std::size_t errors() const { return errors_; }
    std::size_t warnings() const { return warnings_; }

private:
    std::ostream& out_;
    std::string command_;
    std::mutex mutex_;
    std::size_t errors_ = 0;
    std::size_t warnings_ = 0;
};

} // namespace vocalis::app
