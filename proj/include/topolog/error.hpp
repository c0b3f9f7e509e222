#pragma once

#include <stdexcept>
#include <string>

namespace topolog {

enum class ErrorCode {
    MalformedLine,
    MissingAttribute,
    NegativeTimestamp,
    EmptyRun,
    EmptyAfterFilter,
    DegenerateConfig,
    InvalidFiltration,
    UnfittedGrid,
    NotSymmetric,
    RowMismatch,
    SingleClass,
    TooFewSamples,
    Unfitted,
    MissingFeatureFamily,
    Io,
};

inline const char* to_string(ErrorCode code) {
    switch (code) {
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::MissingAttribute: return "MissingAttribute";
    case ErrorCode::NegativeTimestamp: return "NegativeTimestamp";
    case ErrorCode::EmptyRun: return "EmptyRun";
    case ErrorCode::EmptyAfterFilter: return "EmptyAfterFilter";
    case ErrorCode::DegenerateConfig: return "DegenerateConfig";
    case ErrorCode::InvalidFiltration: return "InvalidFiltration";
    case ErrorCode::UnfittedGrid: return "UnfittedGrid";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::RowMismatch: return "RowMismatch";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::Unfitted: return "Unfitted";
    case ErrorCode::MissingFeatureFamily: return "MissingFeatureFamily";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

/// Every recoverable failure in the library is reported as an Error carrying
/// a machine-checkable code. The CLI maps these to exit status 2.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace topolog
