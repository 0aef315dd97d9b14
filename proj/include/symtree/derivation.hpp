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

#include <algorithm>
#include <compare>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "symtree/analysis.hpp"
#include "symtree/model.hpp"

namespace symtree {

/// A (filler, role) pair: the symbol an input value maps to, bound to the
/// name of the input neuron that carries it.
struct SymbolTuple {
  std::string filler;
  std::string role;

  auto operator<=>(const SymbolTuple&) const = default;
};

using ConfigSet = std::set<SymbolTuple>;

inline std::string to_string(const SymbolTuple& t) { return t.filler + "@" + t.role; }

struct PathEdge {
  NeuronId neuron;
  ConfigSet configs;
  // Present for every edge above the first hidden layer; may be empty when
  // the neuron's activation is driven by its bias alone.
  std::optional<std::vector<PathEdge>> subpath;

  bool operator==(const PathEdge&) const = default;
};

struct DecisionPath {
  std::vector<PathEdge> edges;  // penultimate-layer edges, canonical order
  std::size_t decision = 0;
  std::vector<double> input;

  bool operator==(const DecisionPath&) const = default;

  /// Flat per-layer view, deepest represented layer first.
  std::map<int, std::vector<const PathEdge*>, std::greater<>> levels() const {
    std::map<int, std::vector<const PathEdge*>, std::greater<>> out;
    auto walk = [&](auto&& self, const std::vector<PathEdge>& es) -> void {
      for (const auto& e : es) {
        out[e.neuron.layer].push_back(&e);
        if (e.subpath) self(self, *e.subpath);
      }
    };
    walk(walk, edges);
    return out;
  }
};

/// The symbol a raw input value maps to under the input's symbol table.
inline SymbolTuple symbol_for_input(const InputSpec& spec, std::size_t input_neuron, double value) {
  if (input_neuron >= spec.inputs.size()) throw ArgumentError("input neuron out of range");
  const InputInfo& info = spec.inputs[input_neuron];
  const SymbolMatcher* hit = nullptr;
  for (const auto& m : info.symbols) {
    if (!m.matches(value)) continue;
    if (hit)
      throw ArgumentError("overlapping matchers '" + hit->label + "' and '" + m.label +
                          "' for input '" + info.name + "'");
    hit = &m;
  }
  if (!hit)
    throw ArgumentError("value " + std::to_string(value) + " matches no symbol of input '" +
                        info.name + "'");
  return {hit->label, info.name};
}

/// Configs of an edge: its own set for a leaf, otherwise the union over the
/// subpath, recursively.
inline ConfigSet edge_input_configs(const PathEdge& edge) {
  if (!edge.subpath) return edge.configs;
  ConfigSet out;
  for (const auto& child : *edge.subpath) {
    auto c = edge_input_configs(child);
    out.insert(c.begin(), c.end());
  }
  return out;
}

namespace detail {

struct PathBuilder {
  const NetworkIR& net;
  const ActivationTrace& trace;
  const RelevanceGraph& rel;
  const InputSpec& spec;
  int first_hidden = 0;
  // children[layer][flat] = retained predecessors attached under that neuron
  std::vector<std::vector<std::vector<std::size_t>>> children;

  PathEdge build(int layer, std::size_t flat) const {
    const LayerIR& L = net.layers[static_cast<std::size_t>(layer)];
    const NeuronIR& n = L.neuron(flat);
    PathEdge e;
    e.neuron = n.id;
    if (layer == first_hidden) {
      const auto& flags = rel.edge_relevant[static_cast<std::size_t>(layer)][flat];
      for (std::size_t i = 0; i < n.in_edges.size(); ++i) {
        if (!flags[i]) continue;
        const std::size_t src = net.resolve_source(layer, n.in_edges[i].source);
        e.configs.insert(symbol_for_input(spec, src, trace.output[0][src]));
      }
      return e;
    }
    const int pred = net.neuron_predecessor(layer);
    e.subpath.emplace();
    for (std::size_t c : children[static_cast<std::size_t>(layer)][flat]) {
      PathEdge child = build(pred, c);
      const ConfigSet cs = edge_input_configs(child);
      e.configs.insert(cs.begin(), cs.end());
      e.subpath->push_back(std::move(child));
    }
    return e;
  }
};

}  // namespace detail

/// Hierarchical decision path for the input that produced `trace`. Retained
/// penultimate neurons become top-level edges; every retained deeper neuron
/// becomes an edge in the subpath of the lowest-index retained successor it
/// relevantly feeds.
inline DecisionPath derive_path(const NetworkIR& net, const ActivationTrace& trace,
                                const RelevanceGraph& rel, const InputSpec& spec) {
  const int out_layer = static_cast<int>(net.layers.size()) - 1;
  const int penultimate = net.neuron_predecessor(out_layer);
  if (penultimate == 0) throw DerivationError("network has no hidden layer");

  detail::PathBuilder b{net, trace, rel, spec, 0, {}};
  b.children.resize(net.layers.size());
  int layer = penultimate;
  while (true) {
    const int pred = net.neuron_predecessor(layer);
    if (pred == 0) {
      b.first_hidden = layer;
      break;
    }
    const auto lu = static_cast<std::size_t>(layer);
    const LayerIR& L = net.layers[lu];
    b.children[lu].resize(L.width());
    std::vector<char> owned(net.layers[static_cast<std::size_t>(pred)].width(), 0);
    L.for_each_neuron([&](std::size_t k, const NeuronIR& n) {
      if (!rel.neuron_retained(layer, k)) return;
      std::vector<std::size_t> mine;
      for (std::size_t e = 0; e < n.in_edges.size(); ++e) {
        if (!rel.edge(layer, k, e)) continue;
        const std::size_t src = net.resolve_source(layer, n.in_edges[e].source);
        if (!owned[src]) {
          owned[src] = 1;
          mine.push_back(src);
        }
      }
      std::sort(mine.begin(), mine.end());
      b.children[lu][k] = std::move(mine);
    });
    layer = pred;
  }

  DecisionPath path;
  path.decision = trace.decision;
  path.input = trace.output[0];
  net.layers[static_cast<std::size_t>(penultimate)].for_each_neuron(
      [&](std::size_t j, const NeuronIR&) {
        if (rel.neuron_retained(penultimate, j)) path.edges.push_back(b.build(penultimate, j));
      });
  if (path.edges.empty())
    throw DerivationError("no relevant neuron in the penultimate layer; theta is too aggressive");
  return path;
}

/// forward + relevance + derive_path for one input vector.
inline DecisionPath derive_for_input(const NetworkIR& net, std::span<const double> x,
                                     const RelevanceOptions& opt = {}) {
  const ActivationTrace t = forward(net, x);
  return derive_path(net, t, relevance(net, t, opt), net.input_spec);
}

/// Sum of outer products filler_i x role_i, row-major.
struct BoundSymbols {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  /// Row-major flattening of the matrix.
  const std::vector<double>& flattened() const { return data; }
};

inline BoundSymbols bind_symbols(const std::vector<std::vector<double>>& fillers,
                                 const std::vector<std::vector<double>>& roles) {
  if (fillers.size() != roles.size()) throw ArgumentError("fillers and roles differ in count");
  BoundSymbols s;
  if (fillers.empty()) return s;
  s.rows = fillers.front().size();
  s.cols = roles.front().size();
  s.data.assign(s.rows * s.cols, 0.0);
  for (std::size_t i = 0; i < fillers.size(); ++i) {
    if (fillers[i].size() != s.rows || roles[i].size() != s.cols)
      throw ArgumentError("inconsistent filler/role dimensions");
    for (std::size_t r = 0; r < s.rows; ++r)
      for (std::size_t c = 0; c < s.cols; ++c) s.data[r * s.cols + c] += fillers[i][r] * roles[i][c];
  }
  return s;
}

}  // namespace symtree
