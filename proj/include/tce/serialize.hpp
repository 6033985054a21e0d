#pragma once

#include <string>

#include "json.hpp"
#include "tce/graph.hpp"
#include "tce/search.hpp"

namespace tce {

/// Graph document: {"tensors":[{id,shape,data?,param?}], "operators":[...],
/// "inputs":[...], "outputs":[...]}. Unknown operator kinds and malformed
/// structure raise parse errors.
Graph parse_graph(const nlohmann::json& doc);
nlohmann::json graph_to_json(const Graph& g);

/// Tensor document: {"tensors":[{id,shape,data}]}.
std::map<std::string, Tensor> parse_tensor_doc(const nlohmann::json& doc);
nlohmann::json tensor_doc_to_json(const std::map<std::string, Tensor>& tensors);

/// Catalog document: {"backends":[{name,kind,...}]}.
std::vector<BackendSpec> parse_catalog(const nlohmann::json& doc);

nlohmann::json load_json_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

} // namespace tce
