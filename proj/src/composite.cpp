#include "tce/composite.hpp"

namespace tce {

namespace {

double attr_double_or(const Attrs& attrs, const std::string& key, double fallback) {
    auto it = attrs.find(key);
    if (it == attrs.end()) return fallback;
    if (std::holds_alternative<double>(it->second)) return std::get<double>(it->second);
    if (std::holds_alternative<int64_t>(it->second)) {
        return static_cast<double>(std::get<int64_t>(it->second));
    }
    throw Error(ErrorCode::ShapeMismatch, "attribute " + key + " must be numeric");
}

int64_t attr_int(const Attrs& attrs, const std::string& key) {
    auto it = attrs.find(key);
    if (it == attrs.end() || !std::holds_alternative<int64_t>(it->second)) {
        throw Error(ErrorCode::ShapeMismatch, "missing integer attribute: " + key);
    }
    return std::get<int64_t>(it->second);
}

// Builder that keeps generated ids deterministic: <op id>#<name> for
// operators and tensors alike.
struct FragmentBuilder {
    const std::string& base;
    LoweredFragment frag;
    int seq = 0;

    explicit FragmentBuilder(const std::string& base_id) : base(base_id) {}

    std::string tensor(const Shape& shape, const std::string& name) {
        std::string id = base + "#" + name;
        frag.new_tensors[id] = TensorInfo{shape, std::nullopt, false};
        return id;
    }

    std::string constant(const Shape& shape, float value, const std::string& name) {
        std::string id = base + "#" + name;
        frag.new_tensors[id] =
            TensorInfo{shape, std::vector<float>(static_cast<size_t>(numel(shape)), value),
                       false};
        return id;
    }

    std::string node(const std::string& kind, std::vector<std::string> inputs,
                     std::vector<std::string> outputs, Attrs attrs = {},
                     std::optional<RasterOp> raster = std::nullopt) {
        Operator op;
        op.id = base + "#" + std::to_string(seq++);
        op.kind = kind;
        op.attrs = std::move(attrs);
        op.inputs = std::move(inputs);
        op.outputs = std::move(outputs);
        op.raster = std::move(raster);
        frag.ops.push_back(std::move(op));
        return frag.ops.back().id;
    }
};

// Broadcast of a reduced tensor back along the trailing axis, as a raster
// with stride 0 on that axis.
RasterOp broadcast_last_axis(const Shape& full) {
    Shape reduced(full.begin(), full.end() - 1);
    Strides src;
    if (reduced.empty()) {
        src = {0};
    } else {
        src = default_strides(reduced);
        src.push_back(0);
    }
    Region r;
    r.range = full;
    r.src_view = {0, src};
    r.dst_view = {0, default_strides(full)};
    return RasterOp{{r}, full};
}

LoweredFragment lower_elu(const Operator& op, const Shape& x_shape) {
    const double alpha = attr_double_or(op.attrs, "alpha", 1.0);
    FragmentBuilder b(op.id);
    // elu(x) = relu(x) + alpha * (exp(-relu(-x)) - 1); exact identity for
    // x >= 0 because exp(-0) - 1 == 0 in float.
    auto nx = b.tensor(x_shape, "t0");
    auto rnx = b.tensor(x_shape, "t1");
    auto mn = b.tensor(x_shape, "t2");
    auto ex = b.tensor(x_shape, "t3");
    auto em1 = b.tensor(x_shape, "t4");
    auto scaled = b.tensor(x_shape, "t5");
    auto rx = b.tensor(x_shape, "t6");
    auto ones = b.constant(x_shape, 1.0f, "ones");
    auto alpha_c = b.constant(x_shape, static_cast<float>(alpha), "alpha");
    const std::string& x = op.inputs[0];
    b.node("neg", {x}, {nx});
    b.node("relu", {nx}, {rnx});
    b.node("neg", {rnx}, {mn});
    b.node("exp", {mn}, {ex});
    b.node("sub", {ex, ones}, {em1});
    b.node("mul", {em1, alpha_c}, {scaled});
    b.node("relu", {x}, {rx});
    b.node("add", {rx, scaled}, {op.outputs[0]});
    return std::move(b.frag);
}

LoweredFragment lower_avg_pool2d(const Operator& op, const Shape& x_shape) {
    const int64_t kernel = attr_int(op.attrs, "kernel");
    const int64_t stride = attr_int(op.attrs, "stride");
    const int64_t n = x_shape[0], c = x_shape[1], h = x_shape[2], w = x_shape[3];
    if (kernel < 1 || stride < 1 || h < kernel || w < kernel ||
        (h - kernel) % stride != 0 || (w - kernel) % stride != 0) {
        throw Error(ErrorCode::ShapeMismatch, "avg_pool2d geometry invalid");
    }
    const int64_t ho = (h - kernel) / stride + 1;
    const int64_t wo = (w - kernel) / stride + 1;
    const Shape out_shape{n, c, ho, wo};

    FragmentBuilder b(op.id);
    // One strided-window raster per kernel tap, summed, then scaled by the
    // reciprocal of the window size.
    std::string sum;
    int tap = 0;
    for (int64_t ky = 0; ky < kernel; ++ky) {
        for (int64_t kx = 0; kx < kernel; ++kx) {
            Region r;
            r.range = out_shape;
            r.src_view = {ky * w + kx, {c * h * w, h * w, stride * w, stride}};
            r.dst_view = {0, default_strides(out_shape)};
            auto window = b.tensor(out_shape, "w" + std::to_string(tap));
            b.node("raster", {op.inputs[0]}, {window}, {}, RasterOp{{r}, out_shape});
            if (sum.empty()) {
                sum = window;
            } else {
                auto next = b.tensor(out_shape, "s" + std::to_string(tap));
                b.node("add", {sum, window}, {next});
                sum = next;
            }
            ++tap;
        }
    }
    auto inv = b.constant(out_shape, 1.0f / static_cast<float>(kernel * kernel), "inv");
    b.node("mul", {sum, inv}, {op.outputs[0]});
    return std::move(b.frag);
}

LoweredFragment lower_layer_norm(const Operator& op, const Shape& x_shape) {
    const double eps = attr_double_or(op.attrs, "epsilon", 1e-5);
    const int64_t axis_len = x_shape.back();
    Shape reduced(x_shape.begin(), x_shape.end() - 1);
    if (reduced.empty()) reduced = {1};
    const int64_t last_axis = static_cast<int64_t>(x_shape.size()) - 1;

    FragmentBuilder b(op.id);
    const std::string& x = op.inputs[0];
    auto inv_n = b.constant(reduced, 1.0f / static_cast<float>(axis_len), "invn");
    auto eps_c = b.constant(x_shape, static_cast<float>(eps), "eps");

    auto s = b.tensor(reduced, "sum");
    auto mean = b.tensor(reduced, "mean");
    auto mean_b = b.tensor(x_shape, "meanb");
    auto centered = b.tensor(x_shape, "center");
    auto sq = b.tensor(x_shape, "sq");
    auto ssq = b.tensor(reduced, "ssq");
    auto var = b.tensor(reduced, "var");
    auto var_b = b.tensor(x_shape, "varb");
    auto veps = b.tensor(x_shape, "veps");
    auto sd = b.tensor(x_shape, "sd");

    b.node("reduce_sum", {x}, {s}, {{"axis", last_axis}});
    b.node("mul", {s, inv_n}, {mean});
    b.node("raster", {mean}, {mean_b}, {}, broadcast_last_axis(x_shape));
    b.node("sub", {x, mean_b}, {centered});
    b.node("square", {centered}, {sq});
    b.node("reduce_sum", {sq}, {ssq}, {{"axis", last_axis}});
    b.node("mul", {ssq, inv_n}, {var});
    b.node("raster", {var}, {var_b}, {}, broadcast_last_axis(x_shape));
    b.node("add", {var_b, eps_c}, {veps});
    b.node("sqrt", {veps}, {sd});
    b.node("div", {centered, sd}, {op.outputs[0]});
    return std::move(b.frag);
}

LoweredFragment lower_lstm_cell(const Operator& op, const std::vector<Shape>& in) {
    const Shape& xs = in[0];
    const Shape& hs = in[1];
    const int64_t batch = xs[0];
    const int64_t hidden = hs[1];
    const Shape gates_shape{batch, 4 * hidden};

    FragmentBuilder b(op.id);
    const std::string &x = op.inputs[0], &h = op.inputs[1], &c = op.inputs[2];
    const std::string &w = op.inputs[3], &u = op.inputs[4], &bias = op.inputs[5];

    auto gx = b.tensor(gates_shape, "gx");
    auto gh = b.tensor(gates_shape, "gh");
    auto gsum = b.tensor(gates_shape, "gsum");
    auto bias_b = b.tensor(gates_shape, "biasb");
    auto gates = b.tensor(gates_shape, "gates");
    b.node("matmul", {x, w}, {gx});
    b.node("matmul", {h, u}, {gh});
    b.node("add", {gx, gh}, {gsum});
    {
        Region r;
        r.range = gates_shape;
        r.src_view = {0, {0, 1}};
        r.dst_view = {0, default_strides(gates_shape)};
        b.node("raster", {bias}, {bias_b}, {}, RasterOp{{r}, gates_shape});
    }
    b.node("add", {gsum, bias_b}, {gates});

    // Gate order along the packed axis: input, forget, cell, output.
    const Shape gate_shape{batch, hidden};
    auto slice_gate = [&](int64_t index, const std::string& name) {
        Region r;
        r.range = gate_shape;
        r.src_view = {index * hidden, {4 * hidden, 1}};
        r.dst_view = {0, default_strides(gate_shape)};
        auto t = b.tensor(gate_shape, name);
        b.node("raster", {gates}, {t}, {}, RasterOp{{r}, gate_shape});
        return t;
    };
    auto gi = slice_gate(0, "gi");
    auto gf = slice_gate(1, "gf");
    auto gc = slice_gate(2, "gc");
    auto go = slice_gate(3, "go");

    auto si = b.tensor(gate_shape, "si");
    auto sf = b.tensor(gate_shape, "sf");
    auto tc = b.tensor(gate_shape, "tc");
    auto so = b.tensor(gate_shape, "so");
    b.node("sigmoid", {gi}, {si});
    b.node("sigmoid", {gf}, {sf});
    b.node("tanh", {gc}, {tc});
    b.node("sigmoid", {go}, {so});

    auto keep = b.tensor(gate_shape, "keep");
    auto write = b.tensor(gate_shape, "write");
    auto cn = op.outputs[1];
    auto th = b.tensor(gate_shape, "th");
    b.node("mul", {sf, c}, {keep});
    b.node("mul", {si, tc}, {write});
    b.node("add", {keep, write}, {cn});
    b.node("tanh", {cn}, {th});
    b.node("mul", {so, th}, {op.outputs[0]});
    return std::move(b.frag);
}

} // namespace

LoweredFragment lower_composite(const Operator& op, const std::vector<Shape>& input_shapes) {
    if (op.kind == "elu") return lower_elu(op, input_shapes.at(0));
    if (op.kind == "avg_pool2d") return lower_avg_pool2d(op, input_shapes.at(0));
    if (op.kind == "layer_norm") return lower_layer_norm(op, input_shapes.at(0));
    if (op.kind == "lstm_cell") return lower_lstm_cell(op, input_shapes);
    throw Error(ErrorCode::UnsupportedOp, "not a composite kind: " + op.kind);
}

} // namespace tce
