#include "ltrs/error.hpp"

namespace ltrs {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::Parameter: return "parameter";
        case ErrorCode::UnsupportedSize: return "unsupported_size";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::DegenerateInput: return "degenerate_input";
        case ErrorCode::Io: return "io";
        case ErrorCode::Format: return "format";
        case ErrorCode::Truncation: return "truncation";
        case ErrorCode::Schema: return "schema";
        case ErrorCode::Validation: return "validation";
        case ErrorCode::Divergence: return "divergence";
    }
    return "unknown";
}

}  // namespace ltrs
