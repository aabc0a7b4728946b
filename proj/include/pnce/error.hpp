#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pnce {

enum class ErrorCode {
    InvalidSpec,
    ZeroState,
    NotMaximalLength,
    LagOutOfRange,
    ShiftOutOfRange,
    InvalidConfig,
    DimensionMismatch,
    FrameTooShort,
    RowsOutOfRange,
    SaturationDetected,
    PlanMismatch,
    LengthMismatch,
    BadMagic,
    VersionMismatch,
    TruncatedFile,
    SchemaMismatch,
    IoError,
};

constexpr std::string_view to_string(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::ZeroState: return "ZeroState";
    case ErrorCode::NotMaximalLength: return "NotMaximalLength";
    case ErrorCode::LagOutOfRange: return "LagOutOfRange";
    case ErrorCode::ShiftOutOfRange: return "ShiftOutOfRange";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::FrameTooShort: return "FrameTooShort";
    case ErrorCode::RowsOutOfRange: return "RowsOutOfRange";
    case ErrorCode::SaturationDetected: return "SaturationDetected";
    case ErrorCode::PlanMismatch: return "PlanMismatch";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code)
    {
    }

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what)
{
    throw Error(code, what);
}

} // namespace pnce
