// Copyright 2026 The symtree Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstddef>
#include <sstream>
#include <string>
#include <vector>

#include "symtree/derivation.hpp"
#include "symtree/merging.hpp"

namespace symtree {

enum class ExportFormat { dot, json };

inline ExportFormat parse_format(std::string_view s) {
  if (s == "dot") return ExportFormat::dot;
  if (s == "json") return ExportFormat::json;
  throw ArgumentError("format must be 'dot' or 'json'");
}

struct ExportOptions {
  ExportFormat format = ExportFormat::json;
  bool include_configs = true;
  std::size_t max_label_len = 64;

  void validate() const {
    if (max_label_len < 8) throw ArgumentError("max_label_len must be >= 8");
  }
};

// ---------------------------------------------------------------------------
// JSON

namespace detail {

inline json neuron_to_json(const NeuronId& id) {
  return {{"layer", id.layer}, {"filter", id.filter}, {"neuron", id.neuron}};
}

inline NeuronId neuron_from_json(const json& j) {
  return {j.at("layer").get<int>(), j.at("filter").get<int>(), j.at("neuron").get<int>()};
}

inline json configs_to_json(const ConfigSet& s) {
  json arr = json::array();
  for (const auto& t : s) arr.push_back({{"filler", t.filler}, {"role", t.role}});
  return arr;
}

inline ConfigSet configs_from_json(const json& arr) {
  ConfigSet s;
  for (const auto& t : arr) s.insert({t.at("filler").get<std::string>(), t.at("role").get<std::string>()});
  return s;
}

inline json edges_to_json(const std::vector<PathEdge>& edges) {
  json arr = json::array();
  for (const auto& e : edges) {
    json ej = {{"neuron", neuron_to_json(e.neuron)}, {"configs", configs_to_json(e.configs)}};
    if (e.subpath) ej["subpath"] = edges_to_json(*e.subpath);
    arr.push_back(std::move(ej));
  }
  return arr;
}

inline std::vector<PathEdge> edges_from_json(const json& arr) {
  std::vector<PathEdge> out;
  for (const auto& ej : arr) {
    PathEdge e;
    e.neuron = neuron_from_json(ej.at("neuron"));
    e.configs = configs_from_json(ej.at("configs"));
    if (ej.contains("subpath")) e.subpath = edges_from_json(ej.at("subpath"));
    out.push_back(std::move(e));
  }
  return out;
}

inline json node_to_json(const TreeNode& n, const DecisionTree& tree) {
  json children = json::array();
  if (n.leaf)
    children.push_back({{"leaf",
                         {{"decision", n.leaf->decision},
                          {"decision_label", tree.decision_label(n.leaf->decision)},
                          {"support", n.leaf->support}}}});
  for (const auto& c : n.children)
    children.push_back({{"label", {{"neuron", neuron_to_json(c.label.neuron)},
                                   {"config_set", c.label.config_set}}},
                        {"node", node_to_json(c.node, tree)}});
  json j = {{"children", children}};
  auto t = n.test();
  j["test"] = t ? neuron_to_json(*t) : json(nullptr);
  return j;
}

inline TreeNode node_from_json(const json& j) {
  TreeNode n;
  for (const auto& c : j.at("children")) {
    if (c.contains("leaf")) {
      if (n.leaf) throw ParseError("node has more than one leaf");
      n.leaf = DecisionLeaf{c.at("leaf").at("decision").get<std::size_t>(),
                            c.at("leaf").at("support").get<std::size_t>()};
      continue;
    }
    const json& label = c.at("label");
    n.children.push_back({{neuron_from_json(label.at("neuron")), label.at("config_set").get<std::size_t>()},
                          node_from_json(c.at("node"))});
  }
  return n;
}

}  // namespace detail

inline json path_to_json(const DecisionPath& p) {
  return {{"decision", p.decision}, {"input", p.input}, {"edges", detail::edges_to_json(p.edges)}};
}

inline DecisionPath path_from_json(const json& j) {
  try {
    DecisionPath p;
    p.decision = j.at("decision").get<std::size_t>();
    p.input = j.at("input").get<std::vector<double>>();
    p.edges = detail::edges_from_json(j.at("edges"));
    return p;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed path document: ") + e.what());
  }
}

inline json tree_to_json(const DecisionTree& tree) {
  json sets = json::object();
  for (std::size_t i = 0; i < tree.store.size(); ++i)
    sets[std::to_string(i)] = detail::configs_to_json(tree.store.get(i));
  json doc = {{"network_name", tree.network_name},
              {"network_hash", tree.network_hash},
              {"theta", tree.options.theta},
              {"scope", to_string(tree.options.scope)},
              {"mode", tree.options.mode == RelevanceMode::ratio ? "ratio" : "cumulative"},
              {"epsilon", tree.epsilon},
              {"config_sets", sets},
              {"root", detail::node_to_json(tree.root, tree)}};
  if (tree.options.mode == RelevanceMode::cumulative) doc["rho"] = tree.options.rho;
  if (!tree.output_labels.empty()) doc["output_labels"] = tree.output_labels;
  return doc;
}

inline DecisionTree tree_from_json(const json& doc) {
  try {
    DecisionTree t;
    t.network_name = doc.at("network_name").get<std::string>();
    t.network_hash = doc.value("network_hash", std::string{});
    t.options.theta = doc.at("theta").get<double>();
    t.options.scope = parse_scope(doc.value("scope", std::string("winner")));
    t.options.mode = doc.value("mode", std::string("ratio")) == "cumulative" ? RelevanceMode::cumulative
                                                                             : RelevanceMode::ratio;
    t.options.rho = doc.value("rho", 0.9);
    t.epsilon = doc.value("epsilon", 0.0);
    if (doc.contains("output_labels"))
      t.output_labels = doc.at("output_labels").get<std::vector<std::string>>();
    const json& sets = doc.at("config_sets");
    std::vector<ConfigSet> ordered(sets.size());
    for (const auto& [key, value] : sets.items()) {
      const std::size_t id = std::stoul(key);
      if (id >= ordered.size()) throw ParseError("config set ids must be 0..n-1");
      ordered[id] = detail::configs_from_json(value);
    }
    t.store = ConfigStore::from_sets(std::move(ordered));
    t.root = detail::node_from_json(doc.at("root"));
    return t;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed tree document: ") + e.what());
  } catch (const std::invalid_argument&) {
    throw ParseError("config set ids must be integers");
  }
}

inline std::string to_json(const DecisionTree& tree) { return canonical_dump(tree_to_json(tree)); }
inline std::string to_json(const DecisionPath& path) { return canonical_dump(path_to_json(path)); }

inline DecisionTree read_tree(std::string_view text) { return tree_from_json(parse_json(text, "tree document")); }

// ---------------------------------------------------------------------------
// DOT

namespace detail {

inline std::string dot_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out;
}

inline std::string clip(std::string s, std::size_t max_len) {
  if (s.size() <= max_len) return s;
  s.resize(max_len - 3);
  return s + "...";
}

}  // namespace detail

/// Digraph with one rank per tree depth. Node ids follow a pre-order walk, so
/// equal trees give equal text.
inline std::string to_dot(const DecisionTree& tree, const ExportOptions& opt = {}) {
  opt.validate();
  std::ostringstream os;
  os << "digraph decision_tree {\n";
  os << "  rankdir=TB;\n";
  os << "  node [shape=box, fontname=\"Helvetica\"];\n";
  os << "  edge [fontname=\"Helvetica\"];\n";

  std::vector<std::vector<std::string>> ranks;
  std::size_t next = 0;
  auto emit = [&](auto&& self, const TreeNode& n, std::size_t depth) -> std::string {
    const std::string id = "n" + std::to_string(next++);
    if (ranks.size() <= depth) ranks.resize(depth + 1);
    ranks[depth].push_back(id);
    auto t = n.test();
    std::string label = depth == 0 ? "root" : "";
    if (t) label += (label.empty() ? "" : "\\n") + std::string("test ") + to_string(*t);
    os << "  " << id << " [label=\"" << detail::dot_escape(label) << "\"];\n";
    if (n.leaf) {
      const std::string leaf_id = "n" + std::to_string(next++);
      if (ranks.size() <= depth + 1) ranks.resize(depth + 2);
      ranks[depth + 1].push_back(leaf_id);
      const std::string text = tree.decision_label(n.leaf->decision) + " (" +
                               std::to_string(n.leaf->support) + ")";
      os << "  " << leaf_id << " [shape=ellipse, style=filled, fillcolor=\"#e8f4e8\", label=\""
         << detail::dot_escape(detail::clip(text, opt.max_label_len)) << "\"];\n";
      os << "  " << id << " -> " << leaf_id << ";\n";
    }
    for (const auto& c : n.children) {
      const std::string child = self(self, c.node, depth + 1);
      std::string text = to_string(c.label.neuron);
      if (opt.include_configs) {
        text += " {";
        bool first = true;
        for (const auto& s : tree.store.get(c.label.config_set)) {
          if (!first) text += ", ";
          first = false;
          text += to_string(s);
        }
        text += "}";
      }
      os << "  " << id << " -> " << child << " [label=\""
         << detail::dot_escape(detail::clip(text, opt.max_label_len)) << "\"];\n";
    }
    return id;
  };
  emit(emit, tree.root, 0);
  for (const auto& r : ranks) {
    os << "  { rank=same;";
    for (const auto& id : r) os << " " << id << ";";
    os << " }\n";
  }
  os << "}\n";
  return os.str();
}

inline std::string export_tree(const DecisionTree& tree, const ExportOptions& opt = {}) {
  return opt.format == ExportFormat::dot ? to_dot(tree, opt) : to_json(tree);
}

}  // namespace symtree
