#include "tce/serialize.hpp"

#include <fstream>

namespace tce {

using nlohmann::json;

namespace {

[[noreturn]] void parse_fail(const std::string& message) {
    throw Error(ErrorCode::ParseError, message);
}

Shape parse_shape(const json& j, const std::string& what) {
    if (!j.is_array() || j.empty()) parse_fail(what + ": shape must be a non-empty array");
    Shape s;
    for (const auto& v : j) {
        if (!v.is_number_integer() || v.get<int64_t>() < 1) {
            parse_fail(what + ": shape dims must be positive integers");
        }
        s.push_back(v.get<int64_t>());
    }
    return s;
}

std::string parse_id(const json& j, const std::string& what) {
    if (!j.is_string()) parse_fail(what + ": id must be a string");
    std::string id = j.get<std::string>();
    if (id.empty()) parse_fail(what + ": id must be non-empty");
    if (id.find('#') != std::string::npos) {
        parse_fail(what + ": ids may not contain '#' (reserved for lowering)");
    }
    return id;
}

AttrValue parse_attr_value(const json& j, const std::string& what) {
    if (j.is_number_integer()) return j.get<int64_t>();
    if (j.is_number_float()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    if (j.is_array()) {
        std::vector<int64_t> v;
        for (const auto& e : j) {
            if (!e.is_number_integer()) {
                parse_fail(what + ": list attributes must hold integers");
            }
            v.push_back(e.get<int64_t>());
        }
        return v;
    }
    parse_fail(what + ": unsupported attribute value");
}

json attr_value_to_json(const AttrValue& v) {
    if (std::holds_alternative<int64_t>(v)) return std::get<int64_t>(v);
    if (std::holds_alternative<double>(v)) return std::get<double>(v);
    if (std::holds_alternative<std::string>(v)) return std::get<std::string>(v);
    return std::get<std::vector<int64_t>>(v);
}

View parse_view(const json& j) {
    if (!j.is_object() || !j.contains("offset") || !j.contains("strides")) {
        parse_fail("view needs offset and strides");
    }
    View v;
    v.offset = j.at("offset").get<int64_t>();
    for (const auto& s : j.at("strides")) v.strides.push_back(s.get<int64_t>());
    return v;
}

RasterOp parse_raster(const json& j) {
    if (!j.is_object() || !j.contains("out_shape") || !j.contains("regions")) {
        parse_fail("raster payload needs out_shape and regions");
    }
    RasterOp op;
    op.out_shape = parse_shape(j.at("out_shape"), "raster");
    for (const auto& rj : j.at("regions")) {
        Region r;
        r.src = rj.value("src", static_cast<int64_t>(0));
        r.range = parse_shape(rj.at("range"), "region range");
        r.src_view = parse_view(rj.at("src_view"));
        r.dst_view = parse_view(rj.at("dst_view"));
        op.regions.push_back(std::move(r));
    }
    return op;
}

json view_to_json(const View& v) {
    return json{{"offset", v.offset}, {"strides", v.strides}};
}

json raster_to_json(const RasterOp& op) {
    json regions = json::array();
    for (const Region& r : op.regions) {
        regions.push_back(json{{"src", r.src},
                               {"range", r.range},
                               {"src_view", view_to_json(r.src_view)},
                               {"dst_view", view_to_json(r.dst_view)}});
    }
    return json{{"out_shape", op.out_shape}, {"regions", regions}};
}

const char* category_name(OpCategory c) {
    switch (c) {
        case OpCategory::Atomic: return "atomic";
        case OpCategory::Transform: return "transform";
        case OpCategory::Composite: return "composite";
        case OpCategory::ControlFlow: return "control-flow";
    }
    return "?";
}

} // namespace

Graph parse_graph(const json& doc) {
    if (!doc.is_object()) parse_fail("graph document must be an object");
    Graph g;
    try {
        const json tensors = doc.value("tensors", json::array());
        for (const auto& tj : tensors) {
            std::string id = parse_id(tj.at("id"), "tensor");
            if (g.tensors.count(id)) parse_fail("duplicate tensor id " + id);
            TensorInfo info;
            if (tj.contains("shape")) info.shape = parse_shape(tj.at("shape"), "tensor " + id);
            if (tj.contains("data")) {
                if (!info.shape) parse_fail("tensor " + id + " has data but no shape");
                std::vector<float> data;
                for (const auto& v : tj.at("data")) {
                    if (!v.is_number()) parse_fail("tensor " + id + " data must be numeric");
                    data.push_back(v.get<float>());
                }
                info.data = std::move(data);
            }
            info.param = tj.value("param", false);
            if (info.param && !info.data) {
                parse_fail("tensor " + id + " is a param but has no initial data");
            }
            g.tensors.emplace(std::move(id), std::move(info));
        }
        const json operators = doc.value("operators", json::array());
        for (const auto& oj : operators) {
            Operator op;
            op.id = parse_id(oj.at("id"), "operator");
            if (!oj.at("kind").is_string()) parse_fail("operator kind must be a string");
            op.kind = oj.at("kind").get<std::string>();
            if (!is_known_kind(op.kind)) parse_fail("unknown operator kind: " + op.kind);
            if (oj.contains("category")) {
                const std::string declared = oj.at("category").get<std::string>();
                if (declared != category_name(category_of(op.kind))) {
                    parse_fail("operator " + op.id + " declares category " + declared +
                               " but kind " + op.kind + " is " +
                               category_name(category_of(op.kind)));
                }
            }
            const json attrs = oj.value("attributes", json::object());
            for (const auto& [key, value] : attrs.items()) {
                op.attrs.emplace(key, parse_attr_value(value, "operator " + op.id));
            }
            const json op_inputs = oj.value("inputs", json::array());
            for (const auto& id : op_inputs) op.inputs.push_back(id.get<std::string>());
            const json op_outputs = oj.value("outputs", json::array());
            for (const auto& id : op_outputs) op.outputs.push_back(id.get<std::string>());
            if (oj.contains("raster")) op.raster = parse_raster(oj.at("raster"));
            const json subgraphs = oj.value("subgraphs", json::array());
            for (const auto& sub : subgraphs) op.subgraphs.push_back(parse_graph(sub));
            g.operators.push_back(std::move(op));
        }
        const json g_inputs = doc.value("inputs", json::array());
        for (const auto& id : g_inputs) g.inputs.push_back(id.get<std::string>());
        const json g_outputs = doc.value("outputs", json::array());
        for (const auto& id : g_outputs) g.outputs.push_back(id.get<std::string>());
    } catch (const json::exception& e) {
        parse_fail(std::string("malformed graph document: ") + e.what());
    }
    try {
        validate_graph(g);
    } catch (const Error& e) {
        parse_fail(e.what());
    }
    return g;
}

json graph_to_json(const Graph& g) {
    json tensors = json::array();
    for (const auto& [id, info] : g.tensors) {
        json tj{{"id", id}};
        if (info.shape) tj["shape"] = *info.shape;
        if (info.data) tj["data"] = *info.data;
        if (info.param) tj["param"] = true;
        tensors.push_back(std::move(tj));
    }
    json operators = json::array();
    for (const Operator& op : g.operators) {
        json oj{{"id", op.id},
                {"kind", op.kind},
                {"category", category_name(category_of(op.kind))},
                {"inputs", op.inputs},
                {"outputs", op.outputs}};
        if (!op.attrs.empty()) {
            json attrs = json::object();
            for (const auto& [key, value] : op.attrs) attrs[key] = attr_value_to_json(value);
            oj["attributes"] = std::move(attrs);
        }
        if (op.raster) oj["raster"] = raster_to_json(*op.raster);
        if (!op.subgraphs.empty()) {
            json subs = json::array();
            for (const Graph& sub : op.subgraphs) subs.push_back(graph_to_json(sub));
            oj["subgraphs"] = std::move(subs);
        }
        operators.push_back(std::move(oj));
    }
    return json{{"tensors", tensors},
                {"operators", operators},
                {"inputs", g.inputs},
                {"outputs", g.outputs}};
}

std::map<std::string, Tensor> parse_tensor_doc(const json& doc) {
    std::map<std::string, Tensor> out;
    try {
        for (const auto& tj : doc.at("tensors")) {
            std::string id = tj.at("id").get<std::string>();
            Shape shape = parse_shape(tj.at("shape"), "tensor " + id);
            std::vector<float> data;
            for (const auto& v : tj.at("data")) data.push_back(v.get<float>());
            if (out.count(id)) parse_fail("duplicate tensor id " + id);
            out.emplace(std::move(id), Tensor::from_data(std::move(shape), std::move(data)));
        }
    } catch (const json::exception& e) {
        parse_fail(std::string("malformed tensor document: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::ParseError) throw;
        parse_fail(e.what());
    }
    return out;
}

json tensor_doc_to_json(const std::map<std::string, Tensor>& tensors) {
    json arr = json::array();
    for (const auto& [id, t] : tensors) {
        arr.push_back(json{{"id", id}, {"shape", t.shape()}, {"data", t.buffer()}});
    }
    return json{{"tensors", arr}};
}

std::vector<BackendSpec> parse_catalog(const json& doc) {
    std::vector<BackendSpec> catalog;
    try {
        for (const auto& bj : doc.at("backends")) {
            BackendSpec spec;
            spec.name = bj.at("name").get<std::string>();
            const std::string kind = bj.at("kind").get<std::string>();
            if (kind == "cpu") {
                spec.kind = BackendSpec::Kind::Cpu;
                spec.frequency_ghz = bj.at("frequency_ghz").get<double>();
                spec.fp16 = bj.value("fp16", false);
                if (spec.frequency_ghz <= 0) parse_fail("cpu frequency must be positive");
            } else if (kind == "gpu") {
                spec.kind = BackendSpec::Kind::Gpu;
                spec.flops = bj.at("flops").get<double>();
                if (spec.flops <= 0) parse_fail("gpu flops must be positive");
            } else {
                parse_fail("backend kind must be cpu or gpu");
            }
            spec.registers = bj.at("registers").get<int64_t>();
            spec.simd_width = bj.value("simd_width", static_cast<int64_t>(1));
            spec.schedule_cost = bj.value("schedule_cost", 0.0);
            spec.executable = bj.value("executable", false);
            if (spec.registers < 3) parse_fail("backend needs at least 3 registers");
            if (spec.simd_width < 1) parse_fail("simd_width must be >= 1");
            if (spec.schedule_cost < 0) parse_fail("schedule_cost must be >= 0");
            if (spec.kind == BackendSpec::Kind::Cpu && spec.schedule_cost != 0) {
                parse_fail("cpu backends have zero schedule cost");
            }
            catalog.push_back(std::move(spec));
        }
    } catch (const json::exception& e) {
        parse_fail(std::string("malformed catalog document: ") + e.what());
    }
    if (catalog.empty()) parse_fail("catalog lists no backends");
    return catalog;
}

json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) parse_fail("cannot open file: " + path);
    json doc;
    try {
        in >> doc;
    } catch (const json::exception& e) {
        parse_fail("invalid JSON in " + path + ": " + e.what());
    }
    return doc;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path);
    if (!out) parse_fail("cannot open file for writing: " + path);
    out << content;
}

} // namespace tce
