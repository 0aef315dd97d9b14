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
#include <cmath>
#include <compare>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "symtree/common.hpp"

namespace symtree {

enum class ActivationKind { linear, relu, sigmoid, tanh, softmax };
enum class LayerKind { input, dense_form, maxpool_form, flatten_remap, output };
enum class InputFunction { sum, max };

inline std::string_view to_string(ActivationKind a) {
  switch (a) {
    case ActivationKind::linear: return "linear";
    case ActivationKind::relu: return "relu";
    case ActivationKind::sigmoid: return "sigmoid";
    case ActivationKind::tanh: return "tanh";
    case ActivationKind::softmax: return "softmax";
  }
  return "linear";
}

inline ActivationKind parse_activation(std::string_view s) {
  if (s == "linear") return ActivationKind::linear;
  if (s == "relu") return ActivationKind::relu;
  if (s == "sigmoid") return ActivationKind::sigmoid;
  if (s == "tanh") return ActivationKind::tanh;
  if (s == "softmax") return ActivationKind::softmax;
  throw ParseError("unknown activation kind '" + std::string(s) + "'");
}

inline std::string_view to_string(LayerKind k) {
  switch (k) {
    case LayerKind::input: return "input";
    case LayerKind::dense_form: return "dense-form";
    case LayerKind::maxpool_form: return "maxpool-form";
    case LayerKind::flatten_remap: return "flatten-remap";
    case LayerKind::output: return "output";
  }
  return "input";
}

inline LayerKind parse_layer_kind(std::string_view s) {
  if (s == "input") return LayerKind::input;
  if (s == "dense-form") return LayerKind::dense_form;
  if (s == "maxpool-form") return LayerKind::maxpool_form;
  if (s == "flatten-remap") return LayerKind::flatten_remap;
  if (s == "output") return LayerKind::output;
  throw ParseError("unknown layer kind '" + std::string(s) + "'");
}

/// (layer, filter, neuron). Ordering is lexicographic, which is also the
/// canonical order of neurons inside one layer.
struct NeuronId {
  int layer = 0;
  int filter = 0;
  int neuron = 0;

  auto operator<=>(const NeuronId&) const = default;
};

inline std::string to_string(const NeuronId& id) {
  return "L" + std::to_string(id.layer) + "F" + std::to_string(id.filter) +
         "N" + std::to_string(id.neuron);
}

struct Edge {
  std::size_t source = 0;  // flat index into the preceding layer
  double weight = 0.0;

  bool operator==(const Edge&) const = default;
};

struct NeuronIR {
  NeuronId id;
  std::vector<Edge> in_edges;
  double bias = 0.0;
  bool pruned = false;  // set by static pruning; a pruned neuron outputs 0

  bool operator==(const NeuronIR&) const = default;
};

struct FilterIR {
  std::vector<NeuronIR> neurons;
  double bias = 0.0;

  bool operator==(const FilterIR&) const = default;
};

struct LayerIR {
  int index = 0;
  LayerKind kind = LayerKind::dense_form;
  std::vector<FilterIR> filters;
  ActivationKind activation = ActivationKind::linear;
  InputFunction input_function = InputFunction::sum;
  // flatten-remap only: output position p reads preceding flat index remap[p]
  std::vector<std::size_t> remap;

  bool operator==(const LayerIR&) const = default;

  bool has_neurons() const { return kind != LayerKind::flatten_remap; }

  /// Number of values this layer emits.
  std::size_t width() const {
    if (!has_neurons()) return remap.size();
    std::size_t n = 0;
    for (const auto& f : filters) n += f.neurons.size();
    return n;
  }

  std::size_t flat_index(int filter, int neuron) const {
    std::size_t offset = 0;
    for (int f = 0; f < filter; ++f) offset += filters[static_cast<std::size_t>(f)].neurons.size();
    return offset + static_cast<std::size_t>(neuron);
  }

  /// Inverse of flat_index. Throws std::out_of_range past the end.
  std::pair<int, int> locate(std::size_t flat) const {
    for (std::size_t f = 0; f < filters.size(); ++f) {
      const auto n = filters[f].neurons.size();
      if (flat < n) return {static_cast<int>(f), static_cast<int>(flat)};
      flat -= n;
    }
    throw std::out_of_range("flat neuron index out of range");
  }

  const NeuronIR& neuron(std::size_t flat) const {
    auto [f, n] = locate(flat);
    return filters[static_cast<std::size_t>(f)].neurons[static_cast<std::size_t>(n)];
  }
  NeuronIR& neuron(std::size_t flat) {
    auto [f, n] = locate(flat);
    return filters[static_cast<std::size_t>(f)].neurons[static_cast<std::size_t>(n)];
  }

  template <class Fn>
  void for_each_neuron(Fn&& fn) const {
    std::size_t flat = 0;
    for (const auto& f : filters)
      for (const auto& n : f.neurons) fn(flat++, n);
  }
  template <class Fn>
  void for_each_neuron(Fn&& fn) {
    std::size_t flat = 0;
    for (auto& f : filters)
      for (auto& n : f.neurons) fn(flat++, n);
  }
};

/// Maps a raw input value to a symbol label: either an exact value or an
/// interval [lo, hi) (closed on the right when hi_closed is set).
struct SymbolMatcher {
  std::string label;
  std::optional<double> eq;
  double lo = 0.0;
  double hi = 0.0;
  bool hi_closed = false;

  bool operator==(const SymbolMatcher&) const = default;

  bool matches(double v) const {
    if (eq) return v == *eq;
    return v >= lo && (v < hi || (hi_closed && v == hi));
  }
  double domain_lo() const { return eq ? *eq : lo; }
  double domain_hi() const { return eq ? *eq : hi; }
};

struct InputInfo {
  std::string name;
  std::vector<SymbolMatcher> symbols;

  bool operator==(const InputInfo&) const = default;

  /// Smallest interval containing every matcher.
  std::pair<double, double> domain() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& s : symbols) {
      lo = std::min(lo, s.domain_lo());
      hi = std::max(hi, s.domain_hi());
    }
    return {lo, hi};
  }
};

struct InputSpec {
  std::vector<InputInfo> inputs;

  bool operator==(const InputSpec&) const = default;

  /// One input per neuron, each a single closed symbol "value" over [0, 1].
  static InputSpec unit_range(std::size_t n) {
    InputSpec spec;
    for (std::size_t i = 0; i < n; ++i) {
      SymbolMatcher m{"value", std::nullopt, 0.0, 1.0, true};
      spec.inputs.push_back({"x" + std::to_string(i), {m}});
    }
    return spec;
  }
};

namespace detail {

inline bool matchers_overlap(const SymbolMatcher& a, const SymbolMatcher& b) {
  if (a.eq && b.eq) return *a.eq == *b.eq;
  if (a.eq) return b.matches(*a.eq);
  if (b.eq) return a.matches(*b.eq);
  // Two non-empty intervals; touching endpoints only overlap when both are
  // closed there, and left endpoints are always closed.
  double lo = std::max(a.lo, b.lo);
  double hi = std::min(a.hi, b.hi);
  if (lo < hi) return true;
  if (lo > hi) return false;
  return a.matches(lo) && b.matches(lo);
}

}  // namespace detail

struct NetworkIR {
  std::string name;
  InputSpec input_spec;
  std::vector<LayerIR> layers;
  std::vector<std::string> output_labels;  // optional, one per output neuron

  bool operator==(const NetworkIR&) const = default;

  const LayerIR& input_layer() const { return layers.front(); }
  const LayerIR& output_layer() const { return layers.back(); }
  std::size_t input_width() const { return layers.front().width(); }
  std::size_t output_width() const { return layers.back().width(); }

  std::string output_label(std::size_t k) const {
    if (k < output_labels.size()) return output_labels[k];
    return std::to_string(k);
  }

  /// Index of the nearest layer below `layer` that owns neurons.
  int neuron_predecessor(int layer) const {
    int p = layer - 1;
    while (p > 0 && !layers[static_cast<std::size_t>(p)].has_neurons()) --p;
    return p;
  }

  /// Resolves an edge source of `layer` through any flatten remaps to a flat
  /// index of neuron_predecessor(layer).
  std::size_t resolve_source(int layer, std::size_t source) const {
    int p = layer - 1;
    while (p > 0 && !layers[static_cast<std::size_t>(p)].has_neurons()) {
      source = layers[static_cast<std::size_t>(p)].remap[source];
      --p;
    }
    return source;
  }

  /// Input domains implied by the symbol tables.
  std::vector<std::pair<double, double>> input_ranges() const {
    std::vector<std::pair<double, double>> r;
    r.reserve(input_spec.inputs.size());
    for (const auto& in : input_spec.inputs) r.push_back(in.domain());
    return r;
  }
};

/// Assigns ids, sets per-kind input functions, and checks every structural
/// invariant. Throws ShapeError or ParseError.
inline void finalize(NetworkIR& net) {
  if (net.layers.empty()) throw ParseError("no layers");
  if (net.layers.size() < 2) throw ShapeError("network needs an output layer");
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto& layer = net.layers[l];
    layer.index = static_cast<int>(l);
    const bool first = l == 0;
    const bool last = l + 1 == net.layers.size();
    if (first != (layer.kind == LayerKind::input))
      throw ShapeError("layer 0 and only layer 0 must have kind input");
    if (last && layer.kind != LayerKind::output)
      throw ShapeError("last layer must have kind output");
    if (!last && layer.kind == LayerKind::output)
      throw ShapeError("output kind is only allowed on the last layer");
    if (layer.activation == ActivationKind::softmax && !last)
      throw ShapeError("softmax is only allowed on the output layer");
    layer.input_function = layer.kind == LayerKind::maxpool_form
                               ? InputFunction::max
                               : InputFunction::sum;

    if (!layer.has_neurons()) {
      if (!layer.filters.empty())
        throw ShapeError("flatten-remap layer must not contain neurons");
      const std::size_t prev = net.layers[l - 1].width();
      if (layer.remap.size() != prev)
        throw ShapeError("flatten remap size " + std::to_string(layer.remap.size()) +
                         " does not match preceding width " + std::to_string(prev));
      std::vector<bool> seen(prev, false);
      for (auto r : layer.remap) {
        if (r >= prev || seen[r]) throw ShapeError("flatten remap is not a permutation");
        seen[r] = true;
      }
      continue;
    }
    if (!layer.remap.empty()) throw ShapeError("only flatten-remap layers carry a remap");
    if (layer.filters.empty()) throw ShapeError("layer " + std::to_string(l) + " has no filters");

    const std::size_t prev = first ? 0 : net.layers[l - 1].width();
    for (std::size_t f = 0; f < layer.filters.size(); ++f) {
      auto& filter = layer.filters[f];
      if (filter.neurons.empty())
        throw ShapeError("layer " + std::to_string(l) + " filter " + std::to_string(f) +
                         " has no neurons");
      if (!std::isfinite(filter.bias)) throw ShapeError("non-finite bias");
      for (std::size_t n = 0; n < filter.neurons.size(); ++n) {
        auto& neuron = filter.neurons[n];
        neuron.id = {static_cast<int>(l), static_cast<int>(f), static_cast<int>(n)};
        if (!std::isfinite(neuron.bias)) throw ShapeError("non-finite bias");
        if (first && !neuron.in_edges.empty())
          throw ShapeError("input neurons have no in_edges");
        std::vector<std::size_t> sources;
        sources.reserve(neuron.in_edges.size());
        for (const auto& e : neuron.in_edges) {
          if (e.source >= prev)
            throw ShapeError("edge source " + std::to_string(e.source) + " out of range in " +
                             to_string(neuron.id));
          if (!std::isfinite(e.weight)) throw ShapeError("non-finite weight in " + to_string(neuron.id));
          sources.push_back(e.source);
        }
        std::sort(sources.begin(), sources.end());
        if (std::adjacent_find(sources.begin(), sources.end()) != sources.end())
          throw ShapeError("duplicate edge source in " + to_string(neuron.id));
      }
    }
  }

  const std::size_t width = net.input_width();
  if (net.input_spec.inputs.empty()) net.input_spec = InputSpec::unit_range(width);
  if (net.input_spec.inputs.size() != width)
    throw ShapeError("input_spec lists " + std::to_string(net.input_spec.inputs.size()) +
                     " inputs but the input layer has " + std::to_string(width));
  for (const auto& in : net.input_spec.inputs) {
    if (in.symbols.empty()) throw ParseError("input '" + in.name + "' has no symbols");
    for (std::size_t a = 0; a < in.symbols.size(); ++a) {
      const auto& s = in.symbols[a];
      if (!s.eq && !(s.lo < s.hi || (s.lo == s.hi && s.hi_closed)))
        throw ParseError("empty interval for symbol '" + s.label + "'");
      for (std::size_t b = a + 1; b < in.symbols.size(); ++b)
        if (detail::matchers_overlap(s, in.symbols[b]))
          throw ParseError("overlapping matchers '" + s.label + "' and '" + in.symbols[b].label +
                           "' on input '" + in.name + "'");
    }
  }
  if (!net.output_labels.empty() && net.output_labels.size() != net.output_width())
    throw ShapeError("output_labels size does not match output layer width");
}

// ---------------------------------------------------------------------------
// Interchange document

namespace detail {

inline const json& require(const json& j, const char* key, const char* where) {
  if (!j.is_object() || !j.contains(key))
    throw ParseError(std::string("missing '") + key + "' in " + where);
  return j.at(key);
}

inline double require_number(const json& j, const char* what) {
  if (!j.is_number()) throw ParseError(std::string(what) + " must be a number");
  return j.get<double>();
}

inline json matcher_to_json(const SymbolMatcher& m) {
  json match = json::object();
  if (m.eq) {
    match["eq"] = *m.eq;
  } else {
    match["lo"] = m.lo;
    match["hi"] = m.hi;
    if (m.hi_closed) match["hi_closed"] = true;
  }
  return {{"label", m.label}, {"match", match}};
}

inline SymbolMatcher matcher_from_json(const json& j) {
  SymbolMatcher m;
  m.label = require(j, "label", "symbol").get<std::string>();
  const json& match = require(j, "match", "symbol");
  if (match.contains("eq")) {
    m.eq = require_number(match.at("eq"), "eq");
  } else {
    m.lo = require_number(require(match, "lo", "match"), "lo");
    m.hi = require_number(require(match, "hi", "match"), "hi");
    m.hi_closed = match.value("hi_closed", false);
  }
  return m;
}

}  // namespace detail

inline json input_spec_to_json(const InputSpec& spec) {
  json arr = json::array();
  for (const auto& in : spec.inputs) {
    json syms = json::array();
    for (const auto& s : in.symbols) syms.push_back(detail::matcher_to_json(s));
    arr.push_back({{"name", in.name}, {"symbols", syms}});
  }
  return arr;
}

inline InputSpec input_spec_from_json(const json& j) {
  if (!j.is_array()) throw ParseError("input_spec must be an array");
  InputSpec spec;
  for (const auto& in : j) {
    InputInfo info;
    info.name = detail::require(in, "name", "input_spec entry").get<std::string>();
    for (const auto& s : detail::require(in, "symbols", "input_spec entry"))
      info.symbols.push_back(detail::matcher_from_json(s));
    spec.inputs.push_back(std::move(info));
  }
  return spec;
}

inline json to_interchange_json(const NetworkIR& net) {
  json layers = json::array();
  for (const auto& layer : net.layers) {
    json lj = {{"kind", to_string(layer.kind)}, {"activation", to_string(layer.activation)}};
    json filters = json::array();
    for (const auto& f : layer.filters) {
      json neurons = json::array();
      for (const auto& n : f.neurons) {
        json edges = json::array();
        for (const auto& e : n.in_edges) edges.push_back(json::array({e.source, e.weight}));
        json nj = {{"in_edges", edges}};
        if (n.bias != f.bias) nj["bias"] = n.bias;
        if (n.pruned) nj["pruned"] = true;
        neurons.push_back(std::move(nj));
      }
      filters.push_back({{"bias", f.bias}, {"neurons", neurons}});
    }
    lj["filters"] = filters;
    if (!layer.has_neurons()) lj["remap"] = layer.remap;
    layers.push_back(std::move(lj));
  }
  json doc = {{"name", net.name},
              {"input_spec", input_spec_to_json(net.input_spec)},
              {"layers", layers}};
  if (!net.output_labels.empty()) doc["output_labels"] = net.output_labels;
  return doc;
}

/// Canonical interchange bytes: sorted keys, 17 significant digits.
inline std::string serialize_interchange(const NetworkIR& net) {
  return canonical_dump(to_interchange_json(net));
}

inline NetworkIR from_interchange_json(const json& doc) {
  if (!doc.is_object()) throw ParseError("interchange document must be an object");
  NetworkIR net;
  net.name = doc.value("name", std::string{});
  const json& layers = detail::require(doc, "layers", "document");
  if (!layers.is_array()) throw ParseError("'layers' must be an array");
  if (layers.empty()) throw ParseError("no layers");
  try {
    for (const auto& lj : layers) {
      LayerIR layer;
      layer.kind = parse_layer_kind(detail::require(lj, "kind", "layer").get<std::string>());
      layer.activation = parse_activation(lj.value("activation", std::string("linear")));
      for (const auto& fj : lj.value("filters", json::array())) {
        FilterIR filter;
        filter.bias = detail::require_number(detail::require(fj, "bias", "filter"), "bias");
        for (const auto& nj : detail::require(fj, "neurons", "filter")) {
          NeuronIR n;
          n.bias = nj.contains("bias") ? detail::require_number(nj.at("bias"), "bias") : filter.bias;
          n.pruned = nj.value("pruned", false);
          for (const auto& ej : nj.value("in_edges", json::array())) {
            if (!ej.is_array() || ej.size() != 2 || !ej[0].is_number_unsigned())
              throw ParseError("in_edges entries must be [source_index, weight]");
            n.in_edges.push_back({ej[0].get<std::size_t>(), detail::require_number(ej[1], "weight")});
          }
          filter.neurons.push_back(std::move(n));
        }
        layer.filters.push_back(std::move(filter));
      }
      if (lj.contains("remap")) layer.remap = lj.at("remap").get<std::vector<std::size_t>>();
      net.layers.push_back(std::move(layer));
    }
    if (doc.contains("input_spec")) net.input_spec = input_spec_from_json(doc.at("input_spec"));
    if (doc.contains("output_labels"))
      net.output_labels = doc.at("output_labels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed interchange document: ") + e.what());
  }
  finalize(net);
  return net;
}

inline NetworkIR parse_interchange(std::string_view bytes) {
  return from_interchange_json(parse_json(bytes, "interchange document"));
}

}  // namespace symtree
