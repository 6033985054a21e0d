#include <cmath>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "tce/autodiff.hpp"
#include "tce/runtime.hpp"
#include "tce/serialize.hpp"

namespace {

using tce::Error;
using tce::ErrorCode;

int exit_code_for(const Error& e) {
    switch (e.code()) {
        case ErrorCode::ParseError: return 2;
        case ErrorCode::ModeError: return 3;
        case ErrorCode::Divergence: return 4;
        default: return 1;
    }
}

std::string fmt_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

void print_breakdown(std::ostream& os, const tce::CostBreakdown& b) {
    os << "op                    kind        variant           Q            cost          tiles\n";
    for (const auto& oc : b.per_op) {
        std::string tiles = "-";
        if (oc.tile.t_e > 0) {
            tiles = "(" + std::to_string(oc.tile.t_e) + "," + std::to_string(oc.tile.t_b) + ")";
        }
        char line[256];
        std::snprintf(line, sizeof(line), "%-21s %-11s %-17s %-12llu %-13s %s\n",
                      oc.op_id.c_str(), oc.kind.c_str(), oc.variant.to_string().c_str(),
                      static_cast<unsigned long long>(oc.q), fmt_double(oc.cost).c_str(),
                      tiles.c_str());
        os << line;
    }
    os << "total " << fmt_double(b.total) << "\n";
}

int cmd_run(const std::string& graph_path, const std::string& input_path,
            const std::string& catalog_path, const std::string& mode,
            const std::string& output_path) {
    tce::Graph g = tce::parse_graph(tce::load_json_file(graph_path));
    auto inputs = tce::parse_tensor_doc(tce::load_json_file(input_path));
    auto catalog = tce::parse_catalog(tce::load_json_file(catalog_path));

    std::map<std::string, tce::Tensor> outputs;
    if (mode == "session") {
        tce::SessionResult r = tce::session_run(g, inputs, catalog);
        outputs = std::move(r.outputs);
        std::cout << "backend: " << r.chosen.name << " (cost " << fmt_double(r.chosen_cost.total)
                  << " s)\n";
        if (r.executed.name != r.chosen.name) {
            std::cout << "executed-on: " << r.executed.name << " (cost "
                      << fmt_double(r.executed_cost.total) << " s)\n";
        }
        print_breakdown(std::cout, r.chosen_cost);
        std::cout << "peak-memory: " << r.peak_memory_bytes << " bytes\n";
    } else if (mode == "module") {
        tce::ModulePlan plan = tce::module_split(g);
        tce::ModuleRunResult r = tce::module_run(plan, inputs, catalog);
        outputs = std::move(r.outputs);
        std::cout << "modules: " << plan.modules.size() << "\n";
        for (const auto& line : r.backend_log) std::cout << line << "\n";
    } else {
        throw Error(ErrorCode::ParseError, "mode must be session or module");
    }

    tce::write_text_file(output_path, tce::tensor_doc_to_json(outputs).dump(2) + "\n");
    std::cout << "outputs written to " << output_path << "\n";
    return 0;
}

int cmd_search_report(const std::string& graph_path, const std::string& catalog_path) {
    tce::Graph g = tce::parse_graph(tce::load_json_file(graph_path));
    auto catalog = tce::parse_catalog(tce::load_json_file(catalog_path));
    tce::validate_graph(g);

    // Shapes come from the graph document; inputs must carry declared shapes.
    tce::ShapeMap shapes = tce::infer_shapes(g, {});
    tce::Graph lowered = tce::geometric_pass(g, shapes);
    shapes = tce::infer_shapes(lowered, {});
    auto ops = tce::sized_ops(lowered, tce::topo_order(lowered), shapes);

    for (const auto& spec : catalog) {
        try {
            tce::CostBreakdown b = tce::graph_cost(ops, spec);
            std::cout << "backend " << spec.name << ": C = " << fmt_double(b.total) << " s\n";
        } catch (const Error&) {
            std::cout << "backend " << spec.name << ": unsupported\n";
        }
    }
    tce::Selection sel = tce::select_backend(ops, catalog);
    std::cout << "winner: " << sel.spec.name << "\n";
    print_breakdown(std::cout, sel.breakdown);
    return 0;
}

int cmd_workload(int64_t aop, int64_t top, int64_t cop, int64_t fop, int64_t backends) {
    if (aop < 0 || top < 0 || cop < 0 || fop < 0 || backends < 0) {
        throw Error(ErrorCode::ParseError, "registry counts must be non-negative");
    }
    tce::OperatorRegistry reg{aop, top, cop, fop, backends};
    tce::WorkloadReport rep = tce::workload_report(reg);
    std::cout << "naive:     " << rep.naive << "\n";
    std::cout << "geometric: " << rep.geometric << "\n";
    if (rep.reduction) {
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.1f%%", *rep.reduction * 100.0);
        std::cout << "reduction: " << buf << "\n";
    } else {
        std::cout << "reduction: n/a\n";
    }
    return 0;
}

int cmd_train(const std::string& graph_path, const std::string& data_path,
              const std::string& optimizer, double lr, int64_t steps, double beta1,
              double beta2, double epsilon, const std::string& params_path,
              const std::string& curve_path) {
    tce::Graph g = tce::parse_graph(tce::load_json_file(graph_path));
    auto data = tce::parse_tensor_doc(tce::load_json_file(data_path));
    if (g.outputs.size() != 1) {
        throw Error(ErrorCode::ParseError, "training graph must have one (loss) output");
    }
    const std::string loss_id = g.outputs[0];

    std::vector<std::string> param_ids;
    std::map<std::string, tce::Tensor> params;
    for (const auto& [id, info] : g.tensors) {
        if (info.param) {
            param_ids.push_back(id);
            params.emplace(id, tce::Tensor::from_data(*info.shape, *info.data));
        }
    }
    if (param_ids.empty()) {
        throw Error(ErrorCode::ParseError, "training graph declares no params");
    }

    tce::ShapeMap input_shapes;
    for (const auto& id : g.inputs) {
        auto it = data.find(id);
        if (it == data.end()) {
            throw Error(ErrorCode::ParseError, "data file missing graph input " + id);
        }
        input_shapes[id] = it->second.shape();
    }
    tce::Graph lowered = tce::geometric_pass(g, tce::infer_shapes(g, input_shapes));

    tce::OptimizerState state;
    state.lr = lr;
    state.beta1 = beta1;
    state.beta2 = beta2;
    state.epsilon = epsilon;
    state.kind = optimizer == "adam" ? tce::OptimizerState::Kind::Adam
                                     : tce::OptimizerState::Kind::Sgd;

    auto forward_loss = [&](const std::map<std::string, tce::Tensor>& ps) {
        std::map<std::string, tce::Tensor> env = data;
        for (const auto& [id, t] : ps) env[id] = t; // params override constants
        for (const auto& [id, info] : lowered.tensors) {
            if (info.data && !env.count(id)) {
                env[id] = tce::Tensor::from_data(*info.shape, *info.data);
            }
        }
        for (size_t idx : tce::topo_order(lowered)) {
            const tce::Operator& op = lowered.operators[idx];
            std::vector<const tce::Tensor*> in;
            for (const auto& id : op.inputs) in.push_back(&env.at(id));
            env[op.outputs.at(0)] = tce::execute_atomic(op, in);
        }
        return env.at(loss_id).data()[0];
    };

    std::ostringstream curve;
    for (int64_t step = 0; step < steps; ++step) {
        std::map<std::string, tce::Tensor> env = data;
        for (const auto& [id, t] : params) env[id] = t;
        auto grads = tce::backward(lowered, env, loss_id, param_ids);
        const float loss = forward_loss(params);
        if (!std::isfinite(loss)) {
            throw Error(ErrorCode::Divergence, "loss diverged at step " + std::to_string(step));
        }
        curve << step << " " << fmt_double(loss) << "\n";
        if (state.kind == tce::OptimizerState::Kind::Sgd) {
            tce::sgd_step(params, grads, state.lr);
        } else {
            tce::adam_step(state, params, grads);
        }
    }
    const float final_loss = forward_loss(params);
    if (!std::isfinite(final_loss)) {
        throw Error(ErrorCode::Divergence, "loss diverged after training");
    }
    curve << "final " << fmt_double(final_loss) << "\n";

    tce::write_text_file(params_path, tce::tensor_doc_to_json(params).dump(2) + "\n");
    tce::write_text_file(curve_path, curve.str());
    std::cout << "steps: " << steps << "\n";
    std::cout << "final-loss: " << fmt_double(final_loss) << "\n";
    std::cout << "params written to " << params_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tce: a miniature tensor compute engine"};
    app.require_subcommand(1);

    std::string graph_path, input_path, catalog_path, output_path = "out.json";
    std::string mode = "session";
    auto* run = app.add_subcommand("run", "run inference on a graph");
    run->add_option("--graph", graph_path)->required();
    run->add_option("--input", input_path)->required();
    run->add_option("--catalog", catalog_path)->required();
    run->add_option("--mode", mode)->check(CLI::IsMember({"session", "module"}));
    run->add_option("--output", output_path);

    std::string sr_graph, sr_catalog;
    auto* report = app.add_subcommand("search-report", "cost table per backend");
    report->add_option("--graph", sr_graph)->required();
    report->add_option("--catalog", sr_catalog)->required();

    int64_t aop = 0, top = 0, cop = 0, fop = 0, backends = 0;
    auto* workload = app.add_subcommand("workload", "operator-porting workload arithmetic");
    workload->add_option("--aop", aop)->required();
    workload->add_option("--top", top)->required();
    workload->add_option("--cop", cop)->required();
    workload->add_option("--fop", fop)->required();
    workload->add_option("--backends", backends)->required();

    std::string tr_graph, tr_data, optimizer = "sgd";
    std::string params_path = "params.json", curve_path = "loss_curve.txt";
    double lr = 0.05, beta1 = 0.9, beta2 = 0.999, epsilon = 1e-8;
    int64_t steps = 100;
    auto* train = app.add_subcommand("train", "fit the graph's params");
    train->add_option("--graph", tr_graph)->required();
    train->add_option("--data", tr_data)->required();
    train->add_option("--optimizer", optimizer)->check(CLI::IsMember({"sgd", "adam"}));
    train->add_option("--lr", lr);
    train->add_option("--steps", steps);
    train->add_option("--beta1", beta1);
    train->add_option("--beta2", beta2);
    train->add_option("--eps", epsilon);
    train->add_option("--params-out", params_path);
    train->add_option("--curve-out", curve_path);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e); // --help
        std::cerr << e.what() << "\n";
        return 2;
    }

    try {
        if (run->parsed()) return cmd_run(graph_path, input_path, catalog_path, mode, output_path);
        if (report->parsed()) return cmd_search_report(sr_graph, sr_catalog);
        if (workload->parsed()) return cmd_workload(aop, top, cop, fop, backends);
        if (train->parsed()) {
            return cmd_train(tr_graph, tr_data, optimizer, lr, steps, beta1, beta2, epsilon,
                             params_path, curve_path);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
