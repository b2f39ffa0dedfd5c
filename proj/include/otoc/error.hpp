#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace otoc {

enum class ErrorKind {
    InvalidArgument,
    TailTooHeavy,
    NotHermitian,
    DimMismatch,
    IndexOutOfRange,
    GridTooSmall,
    StepTooLarge,
    NonPositiveValues,
    WindowTooSparse,
    InvalidRate,
    GridMismatch,
    TruncationGuard,
    Config,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
    switch (kind) {
        case ErrorKind::InvalidArgument: return "InvalidArgument";
        case ErrorKind::TailTooHeavy: return "TailTooHeavy";
        case ErrorKind::NotHermitian: return "NotHermitian";
        case ErrorKind::DimMismatch: return "DimMismatch";
        case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
        case ErrorKind::GridTooSmall: return "GridTooSmall";
        case ErrorKind::StepTooLarge: return "StepTooLarge";
        case ErrorKind::NonPositiveValues: return "NonPositiveValues";
        case ErrorKind::WindowTooSparse: return "WindowTooSparse";
        case ErrorKind::InvalidRate: return "InvalidRate";
        case ErrorKind::GridMismatch: return "GridMismatch";
        case ErrorKind::TruncationGuard: return "TruncationGuard";
        case ErrorKind::Config: return "Config";
    }
    return "Unknown";
}

/// Single exception type for the library; callers dispatch on kind().
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

    /// Numerical guards (truncation, energy drift) versus caller mistakes.
    bool is_numerical_guard() const noexcept {
        return kind_ == ErrorKind::TailTooHeavy || kind_ == ErrorKind::TruncationGuard ||
               kind_ == ErrorKind::StepTooLarge;
    }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

inline void require(bool cond, ErrorKind kind, const std::string& what) {
    if (!cond) fail(kind, what);
}

}  // namespace otoc
