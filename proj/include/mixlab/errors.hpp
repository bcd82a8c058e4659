#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mixlab {

enum class ErrorCode {
    LengthMismatch,
    MismatchedSums,
    DegreeTooSmall,
    DegreeTooLarge,
    ModelMismatch,
    BadRange,
    ImpossibleStep,
    NotConverged,
    AllReplicatesFailed,
    BadCurveName,
    BadValue,
    BudgetExceeded,
    UnknownFlag,
    BadGeneratorSyntax,
    MissingRequired,
    Io,
    Parse,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Base exception for every recoverable failure raised by the library.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    [[nodiscard]] ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace mixlab
