#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tce/geometry.hpp"
#include "tce/tensor.hpp"

namespace tce {

using AttrValue = std::variant<int64_t, double, std::string, std::vector<int64_t>>;
using Attrs = std::map<std::string, AttrValue>;

enum class OpCategory { Atomic, Transform, Composite, ControlFlow };

struct Graph;

struct Operator {
    std::string id;
    std::string kind;
    Attrs attrs;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::optional<RasterOp> raster;  // kind == "raster" only
    std::vector<Graph> subgraphs;    // if: {then, else}; while: {cond, body}

    bool operator==(const Operator&) const = default;
};

struct TensorInfo {
    std::optional<Shape> shape;
    std::optional<std::vector<float>> data; // constant payload
    bool param = false;                     // trainable constant

    bool operator==(const TensorInfo&) const = default;
};

struct Graph {
    std::vector<Operator> operators;
    std::map<std::string, TensorInfo> tensors;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;

    bool operator==(const Graph&) const = default;
};

bool is_known_kind(std::string_view kind);
OpCategory category_of(std::string_view kind);

/// Structural checks: referenced tensor ids exist, every tensor has exactly
/// one producer, control-flow subgraph arity matches the kind. Recurses.
void validate_graph(const Graph& g);

/// Deterministic topological order (operator indices); ready nodes are taken
/// in ascending operator-id order. Throws on cycles.
std::vector<size_t> topo_order(const Graph& g);

using ShapeMap = std::map<std::string, Shape>;

/// Assigns a shape to every tensor given shapes for the graph inputs.
/// Constants take their declared shape. Control-flow bodies are inferred
/// recursively and must agree across branches.
ShapeMap infer_shapes(const Graph& g, const ShapeMap& input_shapes);

/// Operator-support census used for the porting-workload arithmetic.
struct OperatorRegistry {
    int64_t atomic = 0;
    int64_t transform = 0;
    int64_t composite = 0;
    int64_t control_flow = 0;
    int64_t backends = 0;
};

struct WorkloadReport {
    int64_t naive = 0;
    int64_t geometric = 0;
    std::optional<double> reduction; // empty when naive == 0
};

/// naive counts every operator ported per backend; geometric counts the
/// atomic set plus one raster per backend and each remaining operator once.
WorkloadReport workload_report(const OperatorRegistry& r);

} // namespace tce
