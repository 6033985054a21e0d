#include "tce/runtime.hpp"

#include <algorithm>
#include <unordered_map>
#include <unordered_set>

namespace tce {

namespace {

std::vector<int64_t> attr_ints(const Attrs& attrs, const std::string& key) {
    auto it = attrs.find(key);
    if (it == attrs.end() || !std::holds_alternative<std::vector<int64_t>>(it->second)) {
        throw Error(ErrorCode::ShapeMismatch, "missing integer-list attribute: " + key);
    }
    return std::get<std::vector<int64_t>>(it->second);
}

int64_t attr_int(const Attrs& attrs, const std::string& key) {
    auto it = attrs.find(key);
    if (it == attrs.end() || !std::holds_alternative<int64_t>(it->second)) {
        throw Error(ErrorCode::ShapeMismatch, "missing integer attribute: " + key);
    }
    return std::get<int64_t>(it->second);
}

RasterOp decompose_transform_op(const Operator& op, const std::vector<Shape>& in) {
    if (op.kind == "transpose") return decompose_transpose(in.at(0), attr_ints(op.attrs, "perm"));
    if (op.kind == "permute") return decompose_permute(in.at(0), attr_ints(op.attrs, "perm"));
    if (op.kind == "slice") {
        return decompose_slice(in.at(0), attr_ints(op.attrs, "begin"),
                               attr_ints(op.attrs, "size"));
    }
    if (op.kind == "concat") return decompose_concat(in, attr_int(op.attrs, "axis"));
    if (op.kind == "reshape") return decompose_reshape(in.at(0), attr_ints(op.attrs, "shape"));
    throw Error(ErrorCode::InvalidTransform, "not a transform kind: " + op.kind);
}

std::vector<Shape> input_shapes_of(const Operator& op, const ShapeMap& shapes) {
    std::vector<Shape> in;
    in.reserve(op.inputs.size());
    for (const auto& id : op.inputs) in.push_back(shapes.at(id));
    return in;
}

// Lower transforms to rasters and splice composite expansions in place.
bool lower_all(Graph& g, const ShapeMap& shapes) {
    bool changed = false;
    std::vector<Operator> out;
    out.reserve(g.operators.size());
    for (Operator& op : g.operators) {
        const OpCategory cat = category_of(op.kind);
        if (cat == OpCategory::Transform) {
            Operator raster_op;
            raster_op.id = op.id;
            raster_op.kind = "raster";
            raster_op.inputs = op.inputs;
            raster_op.outputs = op.outputs;
            raster_op.raster = decompose_transform_op(op, input_shapes_of(op, shapes));
            out.push_back(std::move(raster_op));
            changed = true;
        } else if (cat == OpCategory::Composite) {
            LoweredFragment frag = lower_composite(op, input_shapes_of(op, shapes));
            for (auto& [id, info] : frag.new_tensors) g.tensors[id] = std::move(info);
            for (Operator& low : frag.ops) out.push_back(std::move(low));
            changed = true;
        } else {
            out.push_back(std::move(op));
        }
    }
    g.operators = std::move(out);
    return changed;
}

std::unordered_map<std::string, size_t> producer_index(const Graph& g) {
    std::unordered_map<std::string, size_t> producer;
    for (size_t i = 0; i < g.operators.size(); ++i) {
        for (const auto& id : g.operators[i].outputs) producer.emplace(id, i);
    }
    return producer;
}

// Drop operators none of whose outputs are consumed or exported, repeatedly
// so dead chains disappear.
bool prune_dead(Graph& g) {
    bool any = false;
    for (;;) {
        std::unordered_set<std::string> used(g.outputs.begin(), g.outputs.end());
        for (const Operator& op : g.operators) {
            for (const auto& id : op.inputs) used.insert(id);
        }
        const auto dead = [&](const Operator& op) {
            return std::none_of(op.outputs.begin(), op.outputs.end(),
                                [&](const std::string& id) { return used.count(id) > 0; });
        };
        if (std::none_of(g.operators.begin(), g.operators.end(), dead)) break;
        std::erase_if(g.operators, dead);
        any = true;
    }
    return any;
}

bool merge_vertical_pass(Graph& g) {
    bool changed = false;
    auto producer = producer_index(g);
    for (Operator& op : g.operators) {
        if (op.kind != "raster" || op.raster->regions.size() != 1) continue;
        const auto& src_id = op.inputs[static_cast<size_t>(op.raster->regions[0].src)];
        auto it = producer.find(src_id);
        if (it == producer.end()) continue;
        Operator& prod = g.operators[it->second];
        if (&prod == &op || prod.kind != "raster") continue;
        auto merged = merge_vertical(*prod.raster, *op.raster);
        if (!merged) continue;
        op.inputs = prod.inputs;
        op.raster = std::move(*merged);
        changed = true;
    }
    if (changed) prune_dead(g);
    return changed;
}

bool merge_horizontal_pass(Graph& g) {
    bool changed = false;
    std::unordered_set<std::string> exported(g.outputs.begin(), g.outputs.end());
    std::unordered_map<std::string, std::string> rewrite;
    for (size_t i = 0; i < g.operators.size(); ++i) {
        const Operator& a = g.operators[i];
        if (a.kind != "raster") continue;
        for (size_t j = i + 1; j < g.operators.size(); ++j) {
            const Operator& b = g.operators[j];
            if (b.kind != "raster" || a.inputs != b.inputs) continue;
            if (rewrite.count(b.outputs[0]) || rewrite.count(a.outputs[0])) continue;
            if (exported.count(b.outputs[0])) continue; // keep exported names intact
            if (!merge_horizontal(*a.raster, *b.raster)) continue;
            rewrite[b.outputs[0]] = a.outputs[0];
            changed = true;
        }
    }
    if (!changed) return false;
    for (Operator& op : g.operators) {
        for (auto& id : op.inputs) {
            auto it = rewrite.find(id);
            if (it != rewrite.end()) id = it->second;
        }
    }
    prune_dead(g);
    return true;
}

void check_no_transform_or_composite(const Graph& g) {
    for (const Operator& op : g.operators) {
        const OpCategory cat = category_of(op.kind);
        if (cat == OpCategory::Transform || cat == OpCategory::Composite) {
            throw Error(ErrorCode::InvalidTransform,
                        "geometric pass left a non-atomic operator: " + op.id);
        }
    }
}

} // namespace

Graph geometric_pass(const Graph& g, const ShapeMap& shapes) {
    Graph out = g;
    lower_all(out, shapes);
    for (;;) {
        bool changed = false;
        while (merge_vertical_pass(out)) changed = true;
        while (merge_horizontal_pass(out)) changed = true;
        if (!changed) break;
    }
    // Control-flow bodies run as sessions of their own; decompose them too.
    for (Operator& op : out.operators) {
        if (category_of(op.kind) != OpCategory::ControlFlow) continue;
        std::vector<Shape> in = input_shapes_of(op, shapes);
        for (size_t s = 0; s < op.subgraphs.size(); ++s) {
            const Graph& sub = op.subgraphs[s];
            ShapeMap sub_in;
            const size_t skip = op.kind == "if" ? 1 : 0;
            for (size_t i = 0; i < sub.inputs.size(); ++i) {
                sub_in[sub.inputs[i]] = in[i + skip];
            }
            op.subgraphs[s] = geometric_pass(sub, infer_shapes(sub, sub_in));
        }
    }
    check_no_transform_or_composite(out);
    return out;
}

std::vector<SizedOp> sized_ops(const Graph& g, const std::vector<size_t>& order,
                               const ShapeMap& shapes) {
    std::vector<SizedOp> ops;
    ops.reserve(order.size());
    for (size_t idx : order) {
        const Operator& op = g.operators[idx];
        SizedOp s;
        s.id = op.id;
        s.kind = op.kind;
        s.attrs = op.attrs;
        for (const auto& id : op.inputs) s.input_shapes.push_back(shapes.at(id));
        s.output_shape = shapes.at(op.outputs.at(0));
        s.raster = op.raster;
        ops.push_back(std::move(s));
    }
    return ops;
}

Tensor execute_atomic(const Operator& op, const std::vector<const Tensor*>& inputs,
                      const AlgorithmVariant& variant) {
    const std::string& k = op.kind;
    if (k == "raster") return raster_execute(*op.raster, inputs);
    if (k == "matmul") return matmul(*inputs.at(0), *inputs.at(1), variant);
    if (k == "conv2d") {
        return conv2d(*inputs.at(0), *inputs.at(1), attr_int(op.attrs, "stride"),
                      attr_int(op.attrs, "pad"), variant);
    }
    if (k == "reduce_sum") return reduce_sum(*inputs.at(0), attr_int(op.attrs, "axis"));
    const EwOp ew = ew_from_kind(k);
    if (ew_is_unary(ew)) return elementwise(ew, *inputs.at(0));
    return elementwise(ew, *inputs.at(0), *inputs.at(1));
}

namespace {

// Direct kernels may be replaced by the breakdown's chosen variants; both
// compute the same operator, conv/matmul within the variants' tolerance.
AlgorithmVariant variant_for(const CostBreakdown& breakdown, const std::string& op_id) {
    for (const OpCost& oc : breakdown.per_op) {
        if (oc.op_id == op_id) return oc.variant;
    }
    return AlgorithmVariant::direct();
}

void seed_constants(const Graph& g, std::map<std::string, Tensor>& env) {
    for (const auto& [id, info] : g.tensors) {
        if (info.data && !env.count(id)) {
            env[id] = Tensor::from_data(*info.shape, *info.data);
        }
    }
}

int64_t tensor_bytes(const Tensor& t) {
    return t.size() * static_cast<int64_t>(sizeof(float));
}

} // namespace

SessionResult session_run(const Graph& g, const std::map<std::string, Tensor>& inputs,
                          const std::vector<BackendSpec>& catalog) {
    validate_graph(g);
    for (const Operator& op : g.operators) {
        if (category_of(op.kind) == OpCategory::ControlFlow) {
            throw Error(ErrorCode::ModeError,
                        "session mode cannot run control-flow operator " + op.id);
        }
    }
    topo_order(g); // surfaces cycles before anything else

    ShapeMap input_shapes;
    for (const auto& id : g.inputs) {
        auto it = inputs.find(id);
        if (it == inputs.end()) {
            throw Error(ErrorCode::ShapeMismatch, "missing graph input " + id);
        }
        input_shapes[id] = it->second.shape();
    }
    ShapeMap shapes = infer_shapes(g, input_shapes);

    Graph lowered = geometric_pass(g, shapes);
    shapes = infer_shapes(lowered, input_shapes);
    std::vector<size_t> order = topo_order(lowered);
    std::vector<SizedOp> ops = sized_ops(lowered, order, shapes);

    SessionResult result;
    Selection sel = select_backend(ops, catalog);
    result.chosen = sel.spec;
    result.chosen_cost = sel.breakdown;
    if (sel.spec.executable) {
        result.executed = sel.spec;
        result.executed_cost = std::move(sel.breakdown);
    } else {
        std::vector<BackendSpec> runnable;
        for (const BackendSpec& spec : catalog) {
            if (spec.executable) runnable.push_back(spec);
        }
        if (runnable.empty()) {
            throw Error(ErrorCode::NoBackend, "catalog has no executable backend");
        }
        Selection exec = select_backend(ops, runnable);
        result.executed = exec.spec;
        result.executed_cost = std::move(exec.breakdown);
    }

    std::map<std::string, Tensor> env = inputs;
    seed_constants(lowered, env);
    int64_t peak = 0;
    for (const auto& [id, t] : env) peak += tensor_bytes(t);
    for (size_t idx : order) {
        const Operator& op = lowered.operators[idx];
        std::vector<const Tensor*> in;
        in.reserve(op.inputs.size());
        for (const auto& id : op.inputs) in.push_back(&env.at(id));
        Tensor out = execute_atomic(op, in, variant_for(result.executed_cost, op.id));
        peak += tensor_bytes(out);
        env[op.outputs.at(0)] = std::move(out);
    }
    result.peak_memory_bytes = peak;

    for (const auto& id : g.outputs) {
        auto it = env.find(id);
        if (it == env.end()) {
            throw Error(ErrorCode::ShapeMismatch, "graph output " + id + " was never produced");
        }
        result.outputs.emplace(id, it->second);
    }
    return result;
}

namespace {

// Collect the subgraph for one control-free span: consumed external tensors
// become module inputs, produced tensors consumed outside the span (or
// exported) become outputs.
Graph build_span_graph(const Graph& g, const std::vector<const Operator*>& span) {
    std::unordered_set<const Operator*> members(span.begin(), span.end());
    std::unordered_set<std::string> escapes(g.outputs.begin(), g.outputs.end());
    for (const Operator& op : g.operators) {
        if (members.count(&op)) continue;
        for (const auto& id : op.inputs) escapes.insert(id);
    }

    Graph m;
    std::unordered_set<std::string> produced;
    for (const Operator* op : span) {
        for (const auto& id : op->outputs) produced.insert(id);
    }
    std::unordered_set<std::string> seen;
    for (const Operator* op : span) {
        m.operators.push_back(*op);
        for (const auto& id : op->inputs) {
            if (seen.insert(id).second) {
                m.tensors[id] = g.tensors.at(id);
                const bool is_const = g.tensors.at(id).data.has_value();
                if (!produced.count(id) && !is_const) m.inputs.push_back(id);
            }
        }
        for (const auto& id : op->outputs) {
            if (seen.insert(id).second) m.tensors[id] = g.tensors.at(id);
            if (escapes.count(id)) m.outputs.push_back(id);
        }
    }
    return m;
}

} // namespace

ModulePlan module_split(const Graph& g) {
    validate_graph(g);
    ModulePlan plan;
    plan.inputs = g.inputs;
    plan.outputs = g.outputs;
    for (const auto& [id, info] : g.tensors) {
        if (info.data) plan.constants.emplace(id, info);
    }

    std::vector<size_t> order = topo_order(g);
    std::vector<const Operator*> span;
    auto flush_span = [&]() {
        if (span.empty()) return;
        Module m;
        m.graph = build_span_graph(g, span);
        plan.modules.push_back(std::move(m));
        span.clear();
    };

    for (size_t idx : order) {
        const Operator& op = g.operators[idx];
        if (category_of(op.kind) != OpCategory::ControlFlow) {
            span.push_back(&op);
            continue;
        }
        flush_span();
        Module m;
        m.is_control = true;
        m.graph.operators.push_back(op);
        for (const auto& id : op.inputs) m.graph.tensors[id] = g.tensors.at(id);
        for (const auto& id : op.outputs) m.graph.tensors[id] = g.tensors.at(id);
        m.graph.outputs = op.outputs;
        for (const Graph& sub : op.subgraphs) m.sub_plans.push_back(module_split(sub));
        plan.modules.push_back(std::move(m));
    }
    flush_span();
    return plan;
}

namespace {

float scalar_value(const Tensor& t, const char* what) {
    if (t.size() != 1) {
        throw Error(ErrorCode::ShapeMismatch, std::string(what) + " must be scalar");
    }
    return t.data()[0];
}

std::map<std::string, Tensor> bind_positional(const std::vector<std::string>& names,
                                              const std::vector<Tensor>& values) {
    if (names.size() != values.size()) {
        throw Error(ErrorCode::ShapeMismatch, "subgraph input arity mismatch");
    }
    std::map<std::string, Tensor> bound;
    for (size_t i = 0; i < names.size(); ++i) bound.emplace(names[i], values[i]);
    return bound;
}

void run_control(const Operator& op, const std::vector<ModulePlan>& sub_plans,
                 std::map<std::string, Tensor>& env,
                 const std::vector<BackendSpec>& catalog, int64_t while_cap,
                 std::vector<std::string>& log) {
    std::vector<Tensor> args;
    for (const auto& id : op.inputs) args.push_back(env.at(id));

    if (op.kind == "if") {
        const bool take_then = scalar_value(args[0], "if condition") != 0.0f;
        const ModulePlan& branch = sub_plans[take_then ? 0 : 1];
        std::vector<Tensor> rest(args.begin() + 1, args.end());
        auto res = module_run(branch, bind_positional(branch.inputs, rest), catalog, while_cap);
        for (size_t i = 0; i < op.outputs.size(); ++i) {
            env[op.outputs[i]] = res.outputs.at(branch.outputs.at(i));
        }
        log.push_back(std::string("if ") + op.id + " -> " + (take_then ? "then" : "else"));
        for (auto& line : res.backend_log) log.push_back("  " + line);
        return;
    }

    // while: evaluate condition over state, then body, until false.
    const ModulePlan& cond = sub_plans[0];
    const ModulePlan& body = sub_plans[1];
    std::vector<Tensor> state = std::move(args);
    int64_t iterations = 0;
    for (;;) {
        auto cres = module_run(cond, bind_positional(cond.inputs, state), catalog, while_cap);
        if (scalar_value(cres.outputs.at(cond.outputs.at(0)), "while condition") == 0.0f) break;
        if (++iterations > while_cap) {
            throw Error(ErrorCode::RunawayLoop,
                        "while " + op.id + " exceeded the iteration cap");
        }
        auto bres = module_run(body, bind_positional(body.inputs, state), catalog, while_cap);
        for (size_t i = 0; i < state.size(); ++i) {
            state[i] = bres.outputs.at(body.outputs.at(i));
        }
    }
    for (size_t i = 0; i < op.outputs.size(); ++i) env[op.outputs[i]] = state[i];
    log.push_back("while " + op.id + " ran " + std::to_string(iterations) + " iterations");
}

} // namespace

ModuleRunResult module_run(const ModulePlan& plan,
                           const std::map<std::string, Tensor>& inputs,
                           const std::vector<BackendSpec>& catalog, int64_t while_cap) {
    std::map<std::string, Tensor> env = inputs;
    for (const auto& [id, info] : plan.constants) {
        if (!env.count(id)) env[id] = Tensor::from_data(*info.shape, *info.data);
    }
    ModuleRunResult result;
    size_t index = 0;
    for (const Module& m : plan.modules) {
        if (m.is_control) {
            run_control(m.graph.operators[0], m.sub_plans, env, catalog, while_cap,
                        result.backend_log);
        } else {
            std::map<std::string, Tensor> mod_in;
            for (const auto& id : m.graph.inputs) mod_in.emplace(id, env.at(id));
            SessionResult r = session_run(m.graph, mod_in, catalog);
            for (auto& [id, t] : r.outputs) env[id] = std::move(t);
            result.backend_log.push_back("module " + std::to_string(index) + ": backend " +
                                         r.chosen.name +
                                         (r.chosen.name == r.executed.name
                                              ? ""
                                              : " (executed on " + r.executed.name + ")"));
        }
        ++index;
    }
    for (const auto& id : plan.outputs) {
        auto it = env.find(id);
        if (it == env.end()) {
            throw Error(ErrorCode::ShapeMismatch, "graph output " + id + " was never produced");
        }
        result.outputs.emplace(id, it->second);
    }
    return result;
}

} // namespace tce
