#include "tce/search.hpp"

#include <algorithm>
#include <cmath>

namespace tce {

double backend_power(const BackendSpec& spec) {
    if (spec.kind == BackendSpec::Kind::Gpu) return spec.flops;
    const double scale = spec.fp16 ? 16.0 : 8.0;
    return scale * spec.frequency_ghz * 1e9;
}

TilePair optimize_tile(int64_t a, int64_t e, int64_t b, int64_t n_registers) {
    if (a < 1 || e < 1 || b < 1) {
        throw Error(ErrorCode::ShapeMismatch, "matrix dims must be >= 1");
    }
    if (n_registers < 3) {
        throw Error(ErrorCode::Infeasible,
                    "register budget below 3 leaves no feasible tile pair");
    }
    bool found = false;
    TilePair best;
    double best_obj = 0.0;
    for (int64_t te = 1; te <= e; ++te) {
        if (te * 1 + te + 1 > n_registers) break; // smallest t_b already infeasible
        for (int64_t tb = 1; tb <= b; ++tb) {
            if (te * tb + te + tb > n_registers) break;
            const double obj = (static_cast<double>(e) / static_cast<double>(te)) *
                               (static_cast<double>(b) / static_cast<double>(tb)) *
                               static_cast<double>(a * te + a * tb + te * tb);
            if (!found || obj < best_obj) {
                found = true;
                best = {te, tb};
                best_obj = obj;
            }
        }
    }
    if (!found) {
        throw Error(ErrorCode::Infeasible, "no feasible tile pair");
    }
    return best;
}

namespace {

int64_t attr_int(const Attrs& attrs, const std::string& key) {
    auto it = attrs.find(key);
    if (it == attrs.end() || !std::holds_alternative<int64_t>(it->second)) {
        throw Error(ErrorCode::ShapeMismatch, "missing integer attribute: " + key);
    }
    return std::get<int64_t>(it->second);
}

bool is_elementwise_kind(const std::string& kind) {
    static const char* kinds[] = {"neg", "square", "sqrt",  "exp", "sigmoid", "tanh",
                                  "relu", "add",   "sub",   "mul", "div",     "max"};
    return std::find_if(std::begin(kinds), std::end(kinds),
                        [&](const char* k) { return kind == k; }) != std::end(kinds);
}

// Strassen recursion depth is not searched; a fixed power-of-two cutoff
// keeps the enumeration small while still modeling the 7/8 saving.
constexpr int64_t kStrassenCutoff = 32;

std::vector<AlgorithmVariant> algorithms_for(const SizedOp& op, const BackendSpec& spec) {
    if (op.kind == "matmul") {
        if (spec.kind == BackendSpec::Kind::Gpu) return {AlgorithmVariant::direct()};
        const Shape& a = op.input_shapes.at(0);
        const Shape& b = op.input_shapes.at(1);
        TilePair t = optimize_tile(a[0], a[1], b[1], spec.registers);
        return {AlgorithmVariant::direct(), AlgorithmVariant::tiled(t.t_e, t.t_b),
                AlgorithmVariant::strassen(kStrassenCutoff)};
    }
    if (op.kind == "conv2d") {
        const Shape& w = op.input_shapes.at(1);
        const int64_t stride = attr_int(op.attrs, "stride");
        if (w[2] == 3 && w[3] == 3 && stride == 1) {
            return {AlgorithmVariant::direct(), AlgorithmVariant::winograd(2),
                    AlgorithmVariant::winograd(6)};
        }
        return {AlgorithmVariant::direct()};
    }
    return {AlgorithmVariant::direct()};
}

uint64_t q_for(const SizedOp& op, const AlgorithmVariant& variant,
               const BackendSpec& spec) {
    if (op.kind == "matmul") {
        const Shape& a = op.input_shapes.at(0);
        const Shape& b = op.input_shapes.at(1);
        return q_matmul(a[0], a[1], b[1], variant);
    }
    if (op.kind == "conv2d") {
        const Shape& x = op.input_shapes.at(0);
        const Shape& w = op.input_shapes.at(1);
        return q_conv2d(x[0], x[1], x[2], x[3], w[0], w[2], w[3],
                        attr_int(op.attrs, "stride"), attr_int(op.attrs, "pad"), variant);
    }
    if (is_elementwise_kind(op.kind)) {
        // Lane operations under the backend's SIMD width.
        const int64_t n = numel(op.output_shape);
        const int64_t lanes = std::max<int64_t>(1, spec.simd_width);
        return static_cast<uint64_t>((n + lanes - 1) / lanes);
    }
    if (op.kind == "reduce_sum") {
        return static_cast<uint64_t>(numel(op.input_shapes.at(0)));
    }
    if (op.kind == "raster") {
        if (!op.raster) {
            throw Error(ErrorCode::UnsupportedOp, "raster op without payload");
        }
        uint64_t moved = 0;
        for (const Region& r : op.raster->regions) {
            moved += static_cast<uint64_t>(numel(r.range));
        }
        return moved;
    }
    throw Error(ErrorCode::UnsupportedOp,
                "cost model does not cover operator kind " + op.kind);
}

} // namespace

OpCost op_cost(const SizedOp& op, const BackendSpec& spec) {
    const double p = backend_power(spec);
    bool found = false;
    OpCost best;
    TilePair tile{0, 0};
    for (const AlgorithmVariant& v : algorithms_for(op, spec)) {
        if (v.kind == AlgorithmVariant::Kind::Tiled) tile = {v.tile_e, v.tile_b};
        const uint64_t q = q_for(op, v, spec);
        const double cost = static_cast<double>(q) / p + spec.schedule_cost;
        if (!found || cost < best.cost) {
            found = true;
            best = {op.id, op.kind, v, q, cost, {0, 0}};
        }
    }
    if (!found) {
        throw Error(ErrorCode::UnsupportedOp,
                    "no algorithm for operator " + op.id + " on backend " + spec.name);
    }
    best.tile = tile;
    return best;
}

CostBreakdown graph_cost(const std::vector<SizedOp>& ops, const BackendSpec& spec) {
    CostBreakdown breakdown;
    for (const SizedOp& op : ops) {
        breakdown.per_op.push_back(op_cost(op, spec));
        breakdown.total += breakdown.per_op.back().cost;
    }
    return breakdown;
}

Selection select_backend(const std::vector<SizedOp>& ops,
                         const std::vector<BackendSpec>& catalog) {
    bool found = false;
    Selection best;
    for (size_t i = 0; i < catalog.size(); ++i) {
        CostBreakdown breakdown;
        try {
            breakdown = graph_cost(ops, catalog[i]);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::UnsupportedOp) continue; // excluded
            throw;
        }
        if (!found || breakdown.total < best.breakdown.total) {
            found = true;
            best = {catalog[i], std::move(breakdown), i};
        }
    }
    if (!found) {
        throw Error(ErrorCode::NoBackend, "no backend supports the operator sequence");
    }
    return best;
}

} // namespace tce
