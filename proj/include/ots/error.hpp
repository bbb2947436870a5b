#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ots {

enum class ErrorCode {
    NonPositiveField,
    NaNField,
    InvalidBandwidth,
    SizeMismatch,
    EmptyEnsemble,
    TooLarge,
    SelfIntersectingPolygon,
    DegeneratePolygon,
    BadWeights,
    OutOfBox,
    RayMiss,
    SingularSystem,
    EmptyInterior,
    InsufficientSnapshots,
    ZeroReference,
    InvalidArgument,
    Io,
    Format,
    Config,
};

/// Stable machine-readable name, used in service error payloads.
std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& what)
        : std::runtime_error(what), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace ots
