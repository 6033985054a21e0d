#pragma once

#include <string>
#include <vector>

#include "tce/graph.hpp"
#include "tce/kernels.hpp"

namespace tce {

/// Descriptor of a (possibly hypothetical) execution target. Only entries
/// with `executable` set can actually run kernels; the rest participate in
/// costing only.
struct BackendSpec {
    enum class Kind { Cpu, Gpu };

    std::string name;
    Kind kind = Kind::Cpu;
    double frequency_ghz = 0.0; // cpu
    bool fp16 = false;          // cpu
    double flops = 0.0;         // gpu
    int64_t registers = 3;
    int64_t simd_width = 1;
    double schedule_cost = 0.0; // seconds per kernel launch, 0 on cpu
    bool executable = false;

    bool operator==(const BackendSpec&) const = default;
};

/// Throughput in operations per second: 16x frequency with fp16 support,
/// 8x without; gpu entries report measured flops directly.
double backend_power(const BackendSpec& spec);

struct TilePair {
    int64_t t_e = 1;
    int64_t t_b = 1;

    bool operator==(const TilePair&) const = default;
};

/// Integer tile pair minimizing (e/t_e)(b/t_b)(a*t_e + a*t_b + t_e*t_b)
/// subject to t_e*t_b + t_e + t_b <= n_registers, 1 <= t_e <= e,
/// 1 <= t_b <= b. Ties break toward smaller t_e, then smaller t_b.
TilePair optimize_tile(int64_t a, int64_t e, int64_t b, int64_t n_registers);

/// Operator plus the shapes the cost model needs.
struct SizedOp {
    std::string id;
    std::string kind;
    Attrs attrs;
    std::vector<Shape> input_shapes;
    Shape output_shape;
    std::optional<RasterOp> raster;
};

struct OpCost {
    std::string op_id;
    std::string kind;
    AlgorithmVariant variant;
    uint64_t q = 0;
    double cost = 0.0;
    TilePair tile{0, 0}; // register-tiling solution for cpu matmul, else zeros
};

struct CostBreakdown {
    std::vector<OpCost> per_op;
    double total = 0.0;
};

/// Minimum of Q_alg / P + S over the algorithms available for the operator
/// on this backend kind. Ties keep the earliest algorithm in enumeration
/// order (direct, then tiled, then strassen / winograd tiles).
OpCost op_cost(const SizedOp& op, const BackendSpec& spec);

CostBreakdown graph_cost(const std::vector<SizedOp>& ops, const BackendSpec& spec);

struct Selection {
    BackendSpec spec;
    CostBreakdown breakdown;
    size_t index = 0;
};

/// Backend with the minimum total cost; catalog order breaks ties. Backends
/// that cannot cost the whole sequence are excluded.
Selection select_backend(const std::vector<SizedOp>& ops,
                         const std::vector<BackendSpec>& catalog);

} // namespace tce
