#include "tce/graph.hpp"

#include <algorithm>
#include <set>
#include <unordered_map>
#include <unordered_set>

namespace tce {

namespace {

const std::set<std::string_view> kUnaryKinds = {
    "neg", "square", "sqrt", "exp", "sigmoid", "tanh", "relu"};
const std::set<std::string_view> kBinaryKinds = {"add", "sub", "mul", "div", "max"};
const std::set<std::string_view> kTransformKinds = {
    "transpose", "permute", "slice", "concat", "reshape"};
const std::set<std::string_view> kCompositeKinds = {
    "elu", "avg_pool2d", "layer_norm", "lstm_cell"};

int64_t attr_int(const Attrs& attrs, const std::string& key) {
    auto it = attrs.find(key);
    if (it == attrs.end() || !std::holds_alternative<int64_t>(it->second)) {
        throw Error(ErrorCode::ShapeMismatch, "missing integer attribute: " + key);
    }
    return std::get<int64_t>(it->second);
}

std::vector<int64_t> attr_ints(const Attrs& attrs, const std::string& key) {
    auto it = attrs.find(key);
    if (it == attrs.end() || !std::holds_alternative<std::vector<int64_t>>(it->second)) {
        throw Error(ErrorCode::ShapeMismatch, "missing integer-list attribute: " + key);
    }
    return std::get<std::vector<int64_t>>(it->second);
}

} // namespace

bool is_known_kind(std::string_view kind) {
    return kUnaryKinds.count(kind) || kBinaryKinds.count(kind) ||
           kTransformKinds.count(kind) || kCompositeKinds.count(kind) ||
           kind == "matmul" || kind == "conv2d" || kind == "reduce_sum" ||
           kind == "raster" || kind == "if" || kind == "while";
}

OpCategory category_of(std::string_view kind) {
    if (kUnaryKinds.count(kind) || kBinaryKinds.count(kind) || kind == "matmul" ||
        kind == "conv2d" || kind == "reduce_sum" || kind == "raster") {
        return OpCategory::Atomic;
    }
    if (kTransformKinds.count(kind)) return OpCategory::Transform;
    if (kCompositeKinds.count(kind)) return OpCategory::Composite;
    if (kind == "if" || kind == "while") return OpCategory::ControlFlow;
    throw Error(ErrorCode::UnsupportedOp, "unknown operator kind: " + std::string(kind));
}

void validate_graph(const Graph& g) {
    std::unordered_map<std::string, const Operator*> producer;
    for (const Operator& op : g.operators) {
        if (!is_known_kind(op.kind)) {
            throw Error(ErrorCode::UnsupportedOp, "unknown operator kind: " + op.kind);
        }
        for (const auto& id : op.inputs) {
            if (!g.tensors.count(id)) {
                throw Error(ErrorCode::ParseError,
                            "operator " + op.id + " reads undeclared tensor " + id);
            }
        }
        for (const auto& id : op.outputs) {
            if (!g.tensors.count(id)) {
                throw Error(ErrorCode::ParseError,
                            "operator " + op.id + " writes undeclared tensor " + id);
            }
            if (!producer.emplace(id, &op).second) {
                throw Error(ErrorCode::ParseError, "tensor " + id + " has two producers");
            }
        }
        const auto category = category_of(op.kind);
        size_t want_subgraphs = category == OpCategory::ControlFlow ? 2 : 0;
        if (op.subgraphs.size() != want_subgraphs) {
            throw Error(ErrorCode::ParseError,
                        "operator " + op.id + " has wrong subgraph count");
        }
        if ((op.kind == "raster") != op.raster.has_value()) {
            throw Error(ErrorCode::ParseError,
                        "raster payload inconsistent on operator " + op.id);
        }
        for (const Graph& sub : op.subgraphs) validate_graph(sub);
    }
    for (const auto& id : g.inputs) {
        if (!g.tensors.count(id)) {
            throw Error(ErrorCode::ParseError, "graph input " + id + " undeclared");
        }
        if (producer.count(id)) {
            throw Error(ErrorCode::ParseError, "graph input " + id + " is produced by an operator");
        }
    }
    for (const auto& id : g.outputs) {
        if (!g.tensors.count(id)) {
            throw Error(ErrorCode::ParseError, "graph output " + id + " undeclared");
        }
    }
    for (const auto& [id, info] : g.tensors) {
        if (info.data) {
            if (!info.shape) {
                throw Error(ErrorCode::ParseError, "constant " + id + " needs a shape");
            }
            if (static_cast<int64_t>(info.data->size()) != numel(*info.shape)) {
                throw Error(ErrorCode::ParseError,
                            "constant " + id + " data length does not match shape");
            }
        }
    }
}

std::vector<size_t> topo_order(const Graph& g) {
    const size_t n = g.operators.size();
    std::unordered_map<std::string, size_t> producer;
    for (size_t i = 0; i < n; ++i) {
        for (const auto& id : g.operators[i].outputs) producer.emplace(id, i);
    }

    // Edges are dependencies between operators, deduplicated per pair.
    std::vector<std::set<size_t>> consumers(n);
    std::vector<size_t> indegree(n, 0);
    for (size_t i = 0; i < n; ++i) {
        std::set<size_t> deps;
        for (const auto& id : g.operators[i].inputs) {
            auto it = producer.find(id);
            if (it != producer.end() && it->second != i) deps.insert(it->second);
        }
        indegree[i] = deps.size();
        for (size_t d : deps) consumers[d].insert(i);
    }

    std::set<std::pair<std::string, size_t>> ready;
    for (size_t i = 0; i < n; ++i) {
        if (indegree[i] == 0) ready.emplace(g.operators[i].id, i);
    }

    std::vector<size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        auto [id, i] = *ready.begin();
        ready.erase(ready.begin());
        order.push_back(i);
        for (size_t c : consumers[i]) {
            if (--indegree[c] == 0) ready.emplace(g.operators[c].id, c);
        }
    }
    if (order.size() != n) {
        throw Error(ErrorCode::CyclicGraph, "computation graph contains a cycle");
    }
    return order;
}

namespace {

Shape unary_shape(const std::vector<Shape>& in) { return in.at(0); }

Shape infer_one(const Operator& op, const std::vector<Shape>& in) {
    const std::string& k = op.kind;
    if (kUnaryKinds.count(k)) return unary_shape(in);
    if (kBinaryKinds.count(k)) {
        if (in.at(0) != in.at(1)) {
            throw Error(ErrorCode::ShapeMismatch,
                        "binary operator " + op.id + " needs equal input shapes");
        }
        return in[0];
    }
    if (k == "reduce_sum") {
        int64_t axis = attr_int(op.attrs, "axis");
        const Shape& s = in.at(0);
        if (axis < 0 || axis >= static_cast<int64_t>(s.size())) {
            throw Error(ErrorCode::AxisOutOfRange, "reduce_sum axis out of range");
        }
        Shape out;
        for (size_t i = 0; i < s.size(); ++i) {
            if (i != static_cast<size_t>(axis)) out.push_back(s[i]);
        }
        if (out.empty()) out = {1};
        return out;
    }
    if (k == "matmul") {
        const Shape& a = in.at(0);
        const Shape& b = in.at(1);
        if (a.size() != 2 || b.size() != 2 || a[1] != b[0]) {
            throw Error(ErrorCode::ShapeMismatch, "matmul shape mismatch on " + op.id);
        }
        return {a[0], b[1]};
    }
    if (k == "conv2d") {
        const Shape& x = in.at(0);
        const Shape& w = in.at(1);
        int64_t stride = attr_int(op.attrs, "stride");
        int64_t pad = attr_int(op.attrs, "pad");
        if (x.size() != 4 || w.size() != 4 || x[1] != w[1] || stride < 1 || pad < 0) {
            throw Error(ErrorCode::ShapeMismatch, "conv2d shape mismatch on " + op.id);
        }
        int64_t hn = x[2] + 2 * pad - w[2];
        int64_t wn = x[3] + 2 * pad - w[3];
        if (hn < 0 || wn < 0 || hn % stride != 0 || wn % stride != 0) {
            throw Error(ErrorCode::ShapeMismatch, "conv2d geometry invalid on " + op.id);
        }
        return {x[0], w[0], hn / stride + 1, wn / stride + 1};
    }
    if (k == "transpose" || k == "permute") {
        auto perm = attr_ints(op.attrs, "perm");
        return (k == "transpose" ? decompose_transpose(in.at(0), perm)
                                 : decompose_permute(in.at(0), perm))
            .out_shape;
    }
    if (k == "slice") {
        return decompose_slice(in.at(0), attr_ints(op.attrs, "begin"),
                               attr_ints(op.attrs, "size"))
            .out_shape;
    }
    if (k == "concat") {
        return decompose_concat(in, attr_int(op.attrs, "axis")).out_shape;
    }
    if (k == "reshape") {
        return decompose_reshape(in.at(0), attr_ints(op.attrs, "shape")).out_shape;
    }
    if (k == "raster") {
        if (!op.raster) {
            throw Error(ErrorCode::ShapeMismatch, "raster operator missing payload");
        }
        return op.raster->out_shape;
    }
    if (k == "elu" || k == "layer_norm") return in.at(0);
    if (k == "avg_pool2d") {
        const Shape& x = in.at(0);
        int64_t kernel = attr_int(op.attrs, "kernel");
        int64_t stride = attr_int(op.attrs, "stride");
        if (x.size() != 4 || kernel < 1 || stride < 1 || x[2] < kernel || x[3] < kernel ||
            (x[2] - kernel) % stride != 0 || (x[3] - kernel) % stride != 0) {
            throw Error(ErrorCode::ShapeMismatch, "avg_pool2d geometry invalid on " + op.id);
        }
        return {x[0], x[1], (x[2] - kernel) / stride + 1, (x[3] - kernel) / stride + 1};
    }
    if (k == "lstm_cell") {
        const Shape& x = in.at(0);
        const Shape& h = in.at(1);
        const Shape& c = in.at(2);
        const Shape& w = in.at(3);
        const Shape& u = in.at(4);
        const Shape& b = in.at(5);
        if (x.size() != 2 || h.size() != 2 || c != h || w.size() != 2 || u.size() != 2 ||
            b.size() != 1 || x[0] != h[0] || w[0] != x[1] || w[1] != 4 * h[1] ||
            u[0] != h[1] || u[1] != 4 * h[1] || b[0] != 4 * h[1]) {
            throw Error(ErrorCode::ShapeMismatch, "lstm_cell shape mismatch on " + op.id);
        }
        return h;
    }
    throw Error(ErrorCode::UnsupportedOp, "cannot infer shape for kind " + k);
}

} // namespace

ShapeMap infer_shapes(const Graph& g, const ShapeMap& input_shapes) {
    ShapeMap shapes;
    for (const auto& [id, info] : g.tensors) {
        if (info.data) shapes[id] = *info.shape;
    }
    for (const auto& id : g.inputs) {
        auto it = input_shapes.find(id);
        if (it == input_shapes.end()) {
            auto declared = g.tensors.at(id).shape;
            if (!declared) {
                throw Error(ErrorCode::ShapeMismatch, "no shape for graph input " + id);
            }
            shapes[id] = *declared;
        } else {
            shapes[id] = it->second;
        }
    }

    for (size_t idx : topo_order(g)) {
        const Operator& op = g.operators[idx];
        std::vector<Shape> in;
        in.reserve(op.inputs.size());
        for (const auto& id : op.inputs) {
            auto it = shapes.find(id);
            if (it == shapes.end()) {
                throw Error(ErrorCode::ShapeMismatch,
                            "operator " + op.id + " reads tensor with unknown shape: " + id);
            }
            in.push_back(it->second);
        }

        std::vector<Shape> out;
        if (op.kind == "if") {
            if (in.empty() || numel(in[0]) != 1) {
                throw Error(ErrorCode::ShapeMismatch, "if condition must be scalar");
            }
            ShapeMap bound;
            std::vector<Shape> branch_out[2];
            for (int b = 0; b < 2; ++b) {
                const Graph& sub = op.subgraphs[static_cast<size_t>(b)];
                if (sub.inputs.size() != in.size() - 1) {
                    throw Error(ErrorCode::ShapeMismatch, "if branch input arity mismatch");
                }
                ShapeMap sub_in;
                for (size_t i = 0; i < sub.inputs.size(); ++i) sub_in[sub.inputs[i]] = in[i + 1];
                auto sub_shapes = infer_shapes(sub, sub_in);
                for (const auto& oid : sub.outputs) branch_out[b].push_back(sub_shapes.at(oid));
            }
            if (branch_out[0] != branch_out[1]) {
                throw Error(ErrorCode::ShapeMismatch, "if branches disagree on output shapes");
            }
            out = branch_out[0];
        } else if (op.kind == "while") {
            const Graph& cond = op.subgraphs[0];
            const Graph& body = op.subgraphs[1];
            if (cond.inputs.size() != in.size() || body.inputs.size() != in.size()) {
                throw Error(ErrorCode::ShapeMismatch, "while subgraph input arity mismatch");
            }
            ShapeMap cond_in, body_in;
            for (size_t i = 0; i < in.size(); ++i) {
                cond_in[cond.inputs[i]] = in[i];
                body_in[body.inputs[i]] = in[i];
            }
            auto cond_shapes = infer_shapes(cond, cond_in);
            if (cond.outputs.size() != 1 || numel(cond_shapes.at(cond.outputs[0])) != 1) {
                throw Error(ErrorCode::ShapeMismatch, "while condition must be scalar");
            }
            auto body_shapes = infer_shapes(body, body_in);
            if (body.outputs.size() != in.size()) {
                throw Error(ErrorCode::ShapeMismatch, "while body output arity mismatch");
            }
            for (size_t i = 0; i < in.size(); ++i) {
                if (body_shapes.at(body.outputs[i]) != in[i]) {
                    throw Error(ErrorCode::ShapeMismatch,
                                "while body must preserve state shapes");
                }
            }
            out = in;
        } else {
            out = {infer_one(op, in)};
            if (op.kind == "lstm_cell") out.push_back(out[0]);
        }

        if (out.size() != op.outputs.size()) {
            throw Error(ErrorCode::ShapeMismatch, "operator " + op.id + " output arity mismatch");
        }
        for (size_t i = 0; i < out.size(); ++i) {
            const auto& id = op.outputs[i];
            auto [it, inserted] = shapes.emplace(id, out[i]);
            if (!inserted && it->second != out[i]) {
                throw Error(ErrorCode::ShapeMismatch, "conflicting shapes for tensor " + id);
            }
            auto declared = g.tensors.at(id).shape;
            if (declared && *declared != out[i]) {
                throw Error(ErrorCode::ShapeMismatch,
                            "declared shape disagrees with inferred shape for " + id);
            }
        }
    }
    return shapes;
}

WorkloadReport workload_report(const OperatorRegistry& r) {
    WorkloadReport rep;
    rep.naive = (r.atomic + r.transform + r.composite) * r.backends + r.control_flow;
    rep.geometric = (r.atomic + 1) * r.backends + r.transform + r.composite + r.control_flow;
    if (rep.naive != 0) {
        rep.reduction = 1.0 - static_cast<double>(rep.geometric) / static_cast<double>(rep.naive);
    }
    return rep;
}

} // namespace tce
