#pragma once

#include "tce/graph.hpp"

namespace tce {

/// Replacement subgraph for a composite operator: new nodes plus the
/// constants and intermediate tensors they introduce. Boundary tensors keep
/// the original operator's input/output ids; generated ids are prefixed with
/// the operator id and '#'.
struct LoweredFragment {
    std::vector<Operator> ops;
    std::map<std::string, TensorInfo> new_tensors;
};

/// Expands elu / avg_pool2d / layer_norm / lstm_cell into atomic and raster
/// nodes with identical semantics.
LoweredFragment lower_composite(const Operator& op, const std::vector<Shape>& input_shapes);

} // namespace tce
