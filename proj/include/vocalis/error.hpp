#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vocalis {

// Failure categories. The CLI maps input-side kinds to exit code 1 and
// computation-side kinds to exit code 2.
enum class ErrorKind {
    invalid_argument,
    degenerate,
    missing_file,
    rate_mismatch,
    malformed,
    io,
    illegal_transition,
    time_order,
};

inline std::string_view to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::missing_file: return "missing_file";
    case ErrorKind::rate_mismatch: return "rate_mismatch";
    case ErrorKind::malformed: return "malformed";
    case ErrorKind::io: return "io";
    case ErrorKind::illegal_transition: return "illegal_transition";
    case ErrorKind::time_order: return "time_order";
    }
    return "unknown";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    bool is_input_error() const noexcept {
        return kind_ != ErrorKind::degenerate;
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline void require(bool condition, ErrorKind kind, const std::string& message) {
    if (!condition) fail(kind, message);
}

} // namespace vocalis
