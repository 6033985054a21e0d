#include "tce/autodiff.hpp"

#include <cmath>

#include "tce/runtime.hpp"

namespace tce {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* what) {
    if (a.shape() != b.shape()) {
        throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": shape mismatch");
    }
}

int64_t attr_int(const Attrs& attrs, const std::string& key) {
    auto it = attrs.find(key);
    if (it == attrs.end() || !std::holds_alternative<int64_t>(it->second)) {
        throw Error(ErrorCode::ShapeMismatch, "missing integer attribute: " + key);
    }
    return std::get<int64_t>(it->second);
}

} // namespace

std::vector<Tensor> grad_elementwise(EwOp op, const std::vector<Tensor>& inputs,
                                     const Tensor& upstream) {
    const Tensor& x = inputs.at(0);
    check_same_shape(x, upstream, "grad_elementwise");
    const int64_t n = x.size();
    if (ew_is_unary(op)) {
        Tensor g(x.shape());
        const float* xv = x.data();
        const float* up = upstream.data();
        float* gv = g.data();
        for (int64_t i = 0; i < n; ++i) {
            switch (op) {
                case EwOp::Neg: gv[i] = -up[i]; break;
                case EwOp::Square: gv[i] = 2.0f * xv[i] * up[i]; break;
                case EwOp::Sqrt: {
                    // Derivative at 0 is clamped to 0 to keep training total.
                    const float r = std::sqrt(xv[i]);
                    gv[i] = r > 0.0f ? up[i] / (2.0f * r) : 0.0f;
                    break;
                }
                case EwOp::Exp: gv[i] = std::exp(xv[i]) * up[i]; break;
                case EwOp::Sigmoid: {
                    const float s = 1.0f / (1.0f + std::exp(-xv[i]));
                    gv[i] = s * (1.0f - s) * up[i];
                    break;
                }
                case EwOp::Tanh: {
                    const float t = std::tanh(xv[i]);
                    gv[i] = (1.0f - t * t) * up[i];
                    break;
                }
                case EwOp::Relu: gv[i] = xv[i] > 0.0f ? up[i] : 0.0f; break;
                default: break;
            }
        }
        return {std::move(g)};
    }

    const Tensor& y = inputs.at(1);
    check_same_shape(x, y, "grad_elementwise");
    Tensor gx(x.shape());
    Tensor gy(y.shape());
    const float* xv = x.data();
    const float* yv = y.data();
    const float* up = upstream.data();
    float* gxv = gx.data();
    float* gyv = gy.data();
    for (int64_t i = 0; i < n; ++i) {
        switch (op) {
            case EwOp::Add:
                gxv[i] = up[i];
                gyv[i] = up[i];
                break;
            case EwOp::Sub:
                gxv[i] = up[i];
                gyv[i] = -up[i];
                break;
            case EwOp::Mul:
                gxv[i] = yv[i] * up[i];
                gyv[i] = xv[i] * up[i];
                break;
            case EwOp::Div:
                gxv[i] = up[i] / yv[i];
                gyv[i] = -up[i] * xv[i] / (yv[i] * yv[i]);
                break;
            case EwOp::Max:
                // Subgradient routes to the left operand on ties.
                gxv[i] = xv[i] >= yv[i] ? up[i] : 0.0f;
                gyv[i] = yv[i] > xv[i] ? up[i] : 0.0f;
                break;
            default: break;
        }
    }
    return {std::move(gx), std::move(gy)};
}

std::pair<Tensor, Tensor> grad_matmul(const Tensor& a, const Tensor& b,
                                      const Tensor& upstream) {
    const int64_t m = a.shape()[0], e = a.shape()[1], n = b.shape()[1];
    if (upstream.shape() != Shape{m, n}) {
        throw Error(ErrorCode::ShapeMismatch, "grad_matmul upstream shape mismatch");
    }
    Tensor ga(Shape{m, e});
    Tensor gb(Shape{e, n});
    const float* av = a.data();
    const float* bv = b.data();
    const float* up = upstream.data();
    for (int64_t i = 0; i < m; ++i) {
        for (int64_t k = 0; k < e; ++k) {
            float acc = 0.0f;
            for (int64_t j = 0; j < n; ++j) acc += up[i * n + j] * bv[k * n + j];
            ga.data()[i * e + k] = acc;
        }
    }
    for (int64_t k = 0; k < e; ++k) {
        for (int64_t j = 0; j < n; ++j) {
            float acc = 0.0f;
            for (int64_t i = 0; i < m; ++i) acc += av[i * e + k] * up[i * n + j];
            gb.data()[k * n + j] = acc;
        }
    }
    return {std::move(ga), std::move(gb)};
}

std::pair<Tensor, Tensor> grad_conv2d(const Tensor& input, const Tensor& weight,
                                      int64_t stride, int64_t pad, const Tensor& upstream) {
    const auto& xs = input.shape();
    const auto& ws = weight.shape();
    const int64_t n = xs[0], c = xs[1], h = xs[2], w = xs[3];
    const int64_t o = ws[0], kh = ws[2], kw = ws[3];
    const int64_t ho = (h + 2 * pad - kh) / stride + 1;
    const int64_t wo = (w + 2 * pad - kw) / stride + 1;
    if (upstream.shape() != Shape{n, o, ho, wo}) {
        throw Error(ErrorCode::ShapeMismatch, "grad_conv2d upstream shape mismatch");
    }
    Tensor gx(xs);
    Tensor gw(ws);
    const float* x = input.data();
    const float* wt = weight.data();
    const float* up = upstream.data();
    for (int64_t in = 0; in < n; ++in) {
        for (int64_t io = 0; io < o; ++io) {
            for (int64_t oy = 0; oy < ho; ++oy) {
                for (int64_t ox = 0; ox < wo; ++ox) {
                    const float u = up[((in * o + io) * ho + oy) * wo + ox];
                    for (int64_t ic = 0; ic < c; ++ic) {
                        for (int64_t ky = 0; ky < kh; ++ky) {
                            const int64_t iy = oy * stride - pad + ky;
                            if (iy < 0 || iy >= h) continue;
                            for (int64_t kx = 0; kx < kw; ++kx) {
                                const int64_t ix = ox * stride - pad + kx;
                                if (ix < 0 || ix >= w) continue;
                                gx.data()[((in * c + ic) * h + iy) * w + ix] +=
                                    u * wt[((io * c + ic) * kh + ky) * kw + kx];
                                gw.data()[((io * c + ic) * kh + ky) * kw + kx] +=
                                    u * x[((in * c + ic) * h + iy) * w + ix];
                            }
                        }
                    }
                }
            }
        }
    }
    return {std::move(gx), std::move(gw)};
}

Tensor grad_reduce_sum(const Shape& in_shape, int64_t axis, const Tensor& upstream) {
    if (axis < 0 || axis >= static_cast<int64_t>(in_shape.size())) {
        throw Error(ErrorCode::AxisOutOfRange, "grad_reduce_sum axis out of range");
    }
    int64_t outer = 1, inner = 1;
    for (int64_t i = 0; i < axis; ++i) outer *= in_shape[static_cast<size_t>(i)];
    for (size_t i = static_cast<size_t>(axis) + 1; i < in_shape.size(); ++i) {
        inner *= in_shape[i];
    }
    const int64_t n = in_shape[static_cast<size_t>(axis)];
    if (upstream.size() != outer * inner) {
        throw Error(ErrorCode::ShapeMismatch, "grad_reduce_sum upstream shape mismatch");
    }
    Tensor g(in_shape);
    const float* up = upstream.data();
    for (int64_t o = 0; o < outer; ++o) {
        for (int64_t k = 0; k < n; ++k) {
            for (int64_t i = 0; i < inner; ++i) {
                g.data()[(o * n + k) * inner + i] = up[o * inner + i];
            }
        }
    }
    return g;
}

std::vector<Tensor> grad_raster(const RasterOp& op, const std::vector<Shape>& src_shapes,
                                const Tensor& upstream) {
    if (upstream.shape() != op.out_shape) {
        throw Error(ErrorCode::ShapeMismatch, "grad_raster upstream shape mismatch");
    }
    std::vector<Tensor> grads;
    grads.reserve(src_shapes.size());
    for (const Shape& s : src_shapes) grads.emplace_back(s);
    for (const Region& r : op.regions) {
        if (r.src < 0 || r.src >= static_cast<int64_t>(grads.size())) {
            throw Error(ErrorCode::RegionBounds, "region source index out of range");
        }
        Tensor& g = grads[static_cast<size_t>(r.src)];
        for_each_coord(r.range, [&](std::span<const int64_t> coord) {
            const int64_t s = linear_offset(r.src_view.strides, r.src_view.offset, coord);
            const int64_t d = linear_offset(r.dst_view.strides, r.dst_view.offset, coord);
            if (s < 0 || s >= g.size() || d < 0 || d >= upstream.size()) {
                throw Error(ErrorCode::RegionBounds, "region maps outside buffer bounds");
            }
            g.data()[s] += upstream.data()[d];
        });
    }
    return grads;
}

std::map<std::string, Tensor> backward(const Graph& g,
                                       const std::map<std::string, Tensor>& inputs,
                                       const std::string& loss_id,
                                       const std::vector<std::string>& wrt) {
    for (const Operator& op : g.operators) {
        const OpCategory cat = category_of(op.kind);
        if (cat == OpCategory::ControlFlow) {
            throw Error(ErrorCode::ModeError, "cannot differentiate control flow");
        }
        if (cat != OpCategory::Atomic) {
            throw Error(ErrorCode::UnsupportedOp,
                        "backward expects a decomposed graph, found " + op.kind);
        }
    }

    // Forward pass with direct kernels, keeping every intermediate.
    std::map<std::string, Tensor> env = inputs;
    for (const auto& [id, info] : g.tensors) {
        if (info.data && !env.count(id)) env[id] = Tensor::from_data(*info.shape, *info.data);
    }
    std::vector<size_t> order = topo_order(g);
    for (size_t idx : order) {
        const Operator& op = g.operators[idx];
        std::vector<const Tensor*> in;
        for (const auto& id : op.inputs) in.push_back(&env.at(id));
        env[op.outputs.at(0)] = execute_atomic(op, in);
    }

    auto loss_it = env.find(loss_id);
    if (loss_it == env.end()) {
        throw Error(ErrorCode::ShapeMismatch, "loss tensor " + loss_id + " not produced");
    }
    if (loss_it->second.size() != 1) {
        throw Error(ErrorCode::ShapeMismatch, "loss must be scalar");
    }

    std::map<std::string, Tensor> grad;
    grad[loss_id] = Tensor::full(loss_it->second.shape(), 1.0f);
    auto accumulate = [&](const std::string& id, Tensor&& piece) {
        auto it = grad.find(id);
        if (it == grad.end()) {
            grad.emplace(id, std::move(piece));
        } else {
            it->second = elementwise(EwOp::Add, it->second, piece);
        }
    };

    for (size_t i = order.size(); i-- > 0;) {
        const Operator& op = g.operators[order[i]];
        auto up_it = grad.find(op.outputs.at(0));
        if (up_it == grad.end()) continue; // not on the loss path
        const Tensor upstream = up_it->second;

        if (op.kind == "raster") {
            std::vector<Shape> src_shapes;
            for (const auto& id : op.inputs) src_shapes.push_back(env.at(id).shape());
            auto gs = grad_raster(*op.raster, src_shapes, upstream);
            for (size_t k = 0; k < op.inputs.size(); ++k) {
                accumulate(op.inputs[k], std::move(gs[k]));
            }
        } else if (op.kind == "matmul") {
            auto [ga, gb] = grad_matmul(env.at(op.inputs[0]), env.at(op.inputs[1]), upstream);
            accumulate(op.inputs[0], std::move(ga));
            accumulate(op.inputs[1], std::move(gb));
        } else if (op.kind == "conv2d") {
            auto [gx, gw] =
                grad_conv2d(env.at(op.inputs[0]), env.at(op.inputs[1]),
                            attr_int(op.attrs, "stride"), attr_int(op.attrs, "pad"), upstream);
            accumulate(op.inputs[0], std::move(gx));
            accumulate(op.inputs[1], std::move(gw));
        } else if (op.kind == "reduce_sum") {
            accumulate(op.inputs[0],
                       grad_reduce_sum(env.at(op.inputs[0]).shape(),
                                       attr_int(op.attrs, "axis"), upstream));
        } else {
            const EwOp ew = ew_from_kind(op.kind);
            std::vector<Tensor> in;
            for (const auto& id : op.inputs) in.push_back(env.at(id));
            auto gs = grad_elementwise(ew, in, upstream);
            for (size_t k = 0; k < op.inputs.size(); ++k) {
                accumulate(op.inputs[k], std::move(gs[k]));
            }
        }
    }

    std::map<std::string, Tensor> result;
    for (const auto& id : wrt) {
        auto it = grad.find(id);
        if (it != grad.end()) {
            result.emplace(id, it->second);
        } else {
            result.emplace(id, Tensor(env.at(id).shape())); // zero: off the loss path
        }
    }
    return result;
}

void sgd_step(std::map<std::string, Tensor>& params,
              const std::map<std::string, Tensor>& grads, double lr) {
    for (auto& [id, p] : params) {
        auto it = grads.find(id);
        if (it == grads.end()) continue;
        check_same_shape(p, it->second, "sgd_step");
        const float* g = it->second.data();
        float* pv = p.data();
        const float flr = static_cast<float>(lr);
        for (int64_t i = 0; i < p.size(); ++i) pv[i] -= flr * g[i];
    }
}

void adam_step(OptimizerState& state, std::map<std::string, Tensor>& params,
               const std::map<std::string, Tensor>& grads) {
    state.step += 1;
    const double b1 = state.beta1;
    const double b2 = state.beta2;
    const double bias1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
    const double bias2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
    for (auto& [id, p] : params) {
        auto git = grads.find(id);
        if (git == grads.end()) continue;
        check_same_shape(p, git->second, "adam_step");
        auto [mit, minserted] = state.m.try_emplace(id, Tensor(p.shape()));
        auto [vit, vinserted] = state.v.try_emplace(id, Tensor(p.shape()));
        check_same_shape(p, mit->second, "adam_step moments");
        const float* g = git->second.data();
        float* m = mit->second.data();
        float* v = vit->second.data();
        float* pv = p.data();
        for (int64_t i = 0; i < p.size(); ++i) {
            const double gi = g[i];
            const double mi = b1 * m[i] + (1.0 - b1) * gi;
            const double vi = b2 * v[i] + (1.0 - b2) * gi * gi;
            m[i] = static_cast<float>(mi);
            v[i] = static_cast<float>(vi);
            const double mhat = mi / bias1;
            const double vhat = vi / bias2;
            pv[i] = static_cast<float>(pv[i] - state.lr * mhat / (std::sqrt(vhat) + state.epsilon));
        }
    }
}

} // namespace tce
