#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ltrs {

enum class ErrorCode {
    Parameter = 2,
    UnsupportedSize,
    DimensionMismatch,
    DegenerateInput,
    Io,
    Format,
    Truncation,
    Schema,
    Validation,
    Divergence,
};

std::string_view to_string(ErrorCode code);

/// Library-wide exception. The code is stable and surfaces as the CLI exit status.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ltrs
