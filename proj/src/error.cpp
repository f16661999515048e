#include "urbanmap/error.hpp"

namespace urbanmap {

const char* to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::Io: return "io";
    case ErrorCode::Format: return "format";
    case ErrorCode::Unsupported: return "unsupported";
    case ErrorCode::Argument: return "argument";
    case ErrorCode::Shape: return "shape";
    case ErrorCode::Contract: return "contract";
    case ErrorCode::Assembly: return "assembly";
    case ErrorCode::Alignment: return "alignment";
    case ErrorCode::Crs: return "crs";
    case ErrorCode::Numeric: return "numeric";
    case ErrorCode::Pairing: return "pairing";
    case ErrorCode::EmptyDataset: return "empty-dataset";
    case ErrorCode::Placement: return "placement";
    }
    return "unknown";
}

}  // namespace urbanmap
