#pragma once

#include "tce/composite.hpp"
#include "tce/graph.hpp"
#include "tce/search.hpp"

namespace tce {

/// Lowers transform and composite operators to atomic + raster nodes, then
/// applies vertical and horizontal raster merging to a fixpoint. Recurses
/// into control-flow bodies. Semantics-preserving and idempotent.
Graph geometric_pass(const Graph& g, const ShapeMap& shapes);

/// Cost-model descriptors for the operators of `g` in execution order.
std::vector<SizedOp> sized_ops(const Graph& g, const std::vector<size_t>& order,
                               const ShapeMap& shapes);

/// Runs one atomic operator (the post-pass vocabulary) on concrete tensors.
Tensor execute_atomic(const Operator& op, const std::vector<const Tensor*>& inputs,
                      const AlgorithmVariant& variant = AlgorithmVariant::direct());

struct SessionResult {
    std::map<std::string, Tensor> outputs;
    BackendSpec chosen;            // cost-model winner over the full catalog
    BackendSpec executed;          // winner restricted to executable entries
    CostBreakdown chosen_cost;
    CostBreakdown executed_cost;
    int64_t peak_memory_bytes = 0; // per-tensor allocation, no reuse
};

/// Whole-graph inference: topological order, shape inference, geometric
/// pass, backend selection, then sequential kernel execution. Control-flow
/// operators are rejected with a mode error.
SessionResult session_run(const Graph& g, const std::map<std::string, Tensor>& inputs,
                          const std::vector<BackendSpec>& catalog);

struct Module;

/// Ordered run plan: maximal control-flow-free spans as session modules,
/// each control-flow operator as its own module.
struct ModulePlan {
    std::vector<Module> modules;
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    std::map<std::string, TensorInfo> constants;
};

struct Module {
    bool is_control = false;
    Graph graph;                       // session subgraph, or the lone control op
    std::vector<ModulePlan> sub_plans; // if: {then, else}; while: {cond, body}
};

ModulePlan module_split(const Graph& g);

struct ModuleRunResult {
    std::map<std::string, Tensor> outputs;
    std::vector<std::string> backend_log; // one line per executed module
};

ModuleRunResult module_run(const ModulePlan& plan,
                           const std::map<std::string, Tensor>& inputs,
                           const std::vector<BackendSpec>& catalog,
                           int64_t while_cap = 10000);

} // namespace tce
