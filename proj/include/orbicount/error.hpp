#pragma once

#include <stdexcept>
#include <string>

namespace orbicount {

enum class ErrorCode {
    // hypgeom
    NotHyperbolic,
    InvalidPoint,
    InvalidGeodesic,
    // orbifold
    NonHyperbolic,
    RootFindFailed,
    UnknownGenerator,
    InvalidSignature,
    // words
    ParseError,
    // mcg
    UnsupportedSignature,
    SlackCapReached,
    CheckpointMismatch,
    InvalidArgument,
    // counting
    GridExceedsBall,
    InsufficientData,
    // simplerep
    SystoleSearchInconclusive,
    StepTooLarge,
    DomainError,
    ConePointEnumerationIncomplete,
    // cli
    ConfigError,
};

inline const char* module_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotHyperbolic:
        case ErrorCode::InvalidPoint:
        case ErrorCode::InvalidGeodesic: return "hypgeom";
        case ErrorCode::NonHyperbolic:
        case ErrorCode::RootFindFailed:
        case ErrorCode::UnknownGenerator:
        case ErrorCode::InvalidSignature: return "orbifold";
        case ErrorCode::ParseError: return "words";
        case ErrorCode::UnsupportedSignature:
        case ErrorCode::SlackCapReached:
        case ErrorCode::CheckpointMismatch:
        case ErrorCode::InvalidArgument: return "mcg";
        case ErrorCode::GridExceedsBall:
        case ErrorCode::InsufficientData: return "counting";
        case ErrorCode::SystoleSearchInconclusive:
        case ErrorCode::StepTooLarge:
        case ErrorCode::DomainError:
        case ErrorCode::ConePointEnumerationIncomplete: return "simplerep";
        case ErrorCode::ConfigError: return "cli";
    }
    return "unknown";
}

inline const char* name_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotHyperbolic: return "NotHyperbolic";
        case ErrorCode::InvalidPoint: return "InvalidPoint";
        case ErrorCode::InvalidGeodesic: return "InvalidGeodesic";
        case ErrorCode::NonHyperbolic: return "NonHyperbolic";
        case ErrorCode::RootFindFailed: return "RootFindFailed";
        case ErrorCode::UnknownGenerator: return "UnknownGenerator";
        case ErrorCode::InvalidSignature: return "InvalidSignature";
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::UnsupportedSignature: return "UnsupportedSignature";
        case ErrorCode::SlackCapReached: return "SlackCapReached";
        case ErrorCode::CheckpointMismatch: return "CheckpointMismatch";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::GridExceedsBall: return "GridExceedsBall";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::SystoleSearchInconclusive: return "SystoleSearchInconclusive";
        case ErrorCode::StepTooLarge: return "StepTooLarge";
        case ErrorCode::DomainError: return "DomainError";
        case ErrorCode::ConePointEnumerationIncomplete: return "ConePointEnumerationIncomplete";
        case ErrorCode::ConfigError: return "ConfigError";
    }
    return "Unknown";
}

/// Error carrying a module-qualified code, e.g. "mcg.SlackCapReached".
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(module_of(code)) + "." + name_of(code) + ": " + detail),
          code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    std::string qualified() const { return std::string(module_of(code_)) + "." + name_of(code_); }

private:
    ErrorCode code_;
};

}  // namespace orbicount
