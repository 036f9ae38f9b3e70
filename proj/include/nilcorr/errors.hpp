#pragma once

#include <stdexcept>
#include <string>

namespace nilcorr {

enum class ErrorCode {
    PresentationMismatch,
    DimensionMismatch,
    FloorAmbiguous,
    StepUnsupported,
    QuadratureNotConverged,
    NotNormal,
    NotFactorable,
    ProvenanceMissing,
    DegreeOverflow,
    NotReducible,
    ResidualNotNull,
    UnsupportedObservable,
    Validation,
};

inline const char* error_code_name(ErrorCode c) {
    switch (c) {
        case ErrorCode::PresentationMismatch: return "PresentationMismatch";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::FloorAmbiguous: return "FloorAmbiguous";
        case ErrorCode::StepUnsupported: return "StepUnsupported";
        case ErrorCode::QuadratureNotConverged: return "QuadratureNotConverged";
        case ErrorCode::NotNormal: return "NotNormal";
        case ErrorCode::NotFactorable: return "NotFactorable";
        case ErrorCode::ProvenanceMissing: return "ProvenanceMissing";
        case ErrorCode::DegreeOverflow: return "DegreeOverflow";
        case ErrorCode::NotReducible: return "NotReducible";
        case ErrorCode::ResidualNotNull: return "ResidualNotNull";
        case ErrorCode::UnsupportedObservable: return "UnsupportedObservable";
        case ErrorCode::Validation: return "Validation";
    }
    return "Unknown";
}

/// Structured error: a code for machine handling, a message for humans,
/// and a location string pointing at the offending input (config key, coordinate index, ...).
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, std::string message, std::string location = {})
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message +
                             (location.empty() ? "" : " [at " + location + "]")),
          code_(code), message_(std::move(message)), location_(std::move(location)) {}

    ErrorCode code() const { return code_; }
    const std::string& message() const { return message_; }
    const std::string& location() const { return location_; }

private:
    ErrorCode code_;
    std::string message_;
    std::string location_;
};

} // namespace nilcorr
