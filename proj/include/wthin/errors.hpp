#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wthin {

enum class ErrorCode {
    NotPsd,
    InvalidSize,
    RankExceedsRows,
    DimensionMismatch,
    InvalidFoldSpec,
    PartitionMismatch,
    FoldTooSmall,
    InvalidDof,
    SingularInput,
    NotPositiveDefinite,
    EmptySample,
    LengthMismatch,
    NonFinite,
    Io,
    Parse,
};

constexpr std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::NotPsd: return "NotPsd";
        case ErrorCode::InvalidSize: return "InvalidSize";
        case ErrorCode::RankExceedsRows: return "RankExceedsRows";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InvalidFoldSpec: return "InvalidFoldSpec";
        case ErrorCode::PartitionMismatch: return "PartitionMismatch";
        case ErrorCode::FoldTooSmall: return "FoldTooSmall";
        case ErrorCode::InvalidDof: return "InvalidDof";
        case ErrorCode::SingularInput: return "SingularInput";
        case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
        case ErrorCode::EmptySample: return "EmptySample";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::NonFinite: return "NonFinite";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Parse: return "Parse";
    }
    return "Unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace wthin
