#pragma once

#include <stdexcept>
#include <string>

namespace tse {

// Error categories; mirrored one-to-one by the C API status codes in tse.h.
enum class ErrorCode {
    range = 1,      // position or date outside sequence coverage
    kind,           // operation applied to the wrong sequence kind
    alignment,      // sequences that cannot be aligned (patient/coverage mismatch)
    parameter,      // invalid parameter value (window width, thresholds, ...)
    structure,      // invariant-violating value (bad runs, bad symbol, ...)
    parse,          // malformed input text
    io,             // file system failure
    not_found,      // missing patient / record / path
    corrupt,        // store checksum mismatch
    config,         // invalid run configuration
    usage,          // bad command invocation
};

class TseError : public std::runtime_error {
public:
    TseError(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
    case ErrorCode::range: return "range";
    case ErrorCode::kind: return "kind";
    case ErrorCode::alignment: return "alignment";
    case ErrorCode::parameter: return "parameter";
    case ErrorCode::structure: return "structure";
    case ErrorCode::parse: return "parse";
    case ErrorCode::io: return "io";
    case ErrorCode::not_found: return "not-found";
    case ErrorCode::corrupt: return "corrupt";
    case ErrorCode::config: return "config";
    case ErrorCode::usage: return "usage";
    }
    return "unknown";
}

} // namespace tse
