#pragma once

#include <stdexcept>
#include <string>

namespace tce {

enum class ErrorCode {
    InvalidShape,
    InvalidCoordinate,
    RegionBounds,
    OverlappingWrite,
    InvalidTransform,
    ShapeMismatch,
    AxisOutOfRange,
    UnsupportedVariant,
    CyclicGraph,
    ModeError,
    RunawayLoop,
    NoBackend,
    UnsupportedOp,
    ParseError,
    Divergence,
    Infeasible,
};

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const { return code_; }

private:
    ErrorCode code_;
};

} // namespace tce
