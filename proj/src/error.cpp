#include "ots/error.hpp"

namespace ots {

std::string_view error_code_name(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::NonPositiveField: return "non_positive_field";
    case ErrorCode::NaNField: return "nan_field";
    case ErrorCode::InvalidBandwidth: return "invalid_bandwidth";
    case ErrorCode::SizeMismatch: return "size_mismatch";
    case ErrorCode::EmptyEnsemble: return "empty_ensemble";
    case ErrorCode::TooLarge: return "too_large";
    case ErrorCode::SelfIntersectingPolygon: return "self_intersecting_polygon";
    case ErrorCode::DegeneratePolygon: return "degenerate_polygon";
    case ErrorCode::BadWeights: return "bad_weights";
    case ErrorCode::OutOfBox: return "out_of_box";
    case ErrorCode::RayMiss: return "ray_miss";
    case ErrorCode::SingularSystem: return "singular_system";
    case ErrorCode::EmptyInterior: return "empty_interior";
    case ErrorCode::InsufficientSnapshots: return "insufficient_snapshots";
    case ErrorCode::ZeroReference: return "zero_reference";
    case ErrorCode::InvalidArgument: return "invalid_argument";
    case ErrorCode::Io: return "io";
    case ErrorCode::Format: return "format";
    case ErrorCode::Config: return "config";
    }
    return "unknown";
}

}  // namespace ots
