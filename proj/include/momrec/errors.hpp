#pragma once

#include <stdexcept>
#include <string>

namespace momrec {

/// Classifies failures so the CLI can map them to exit codes
/// (config -> 2, everything else -> 3).
enum class ErrorKind {
    config,        ///< invalid parameters or malformed configuration
    degenerate,    ///< numerical degeneracy (rank defects, genericity violations)
    inconsistency, ///< mutually contradicting inputs (e.g. norm mismatches)
    io             ///< file format or filesystem problems
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

inline const char* error_kind_name(ErrorKind k) {
    switch (k) {
    case ErrorKind::config: return "config";
    case ErrorKind::degenerate: return "degenerate";
    case ErrorKind::inconsistency: return "inconsistency";
    case ErrorKind::io: return "io";
    }
    return "unknown";
}

} // namespace momrec
