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
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symtree/model.hpp"

namespace symtree {

// ---------------------------------------------------------------------------
// Forward evaluation

/// Net inputs and outputs of every layer for one input vector. Flatten
/// layers hold the permuted values of their predecessor.
struct ActivationTrace {
  std::vector<std::vector<double>> net_input;
  std::vector<std::vector<double>> output;
  std::size_t decision = 0;

  double value(const NeuronId& id, const NetworkIR& net) const {
    const auto& layer = net.layers[static_cast<std::size_t>(id.layer)];
    return output[static_cast<std::size_t>(id.layer)][layer.flat_index(id.filter, id.neuron)];
  }
};

inline double apply_activation(ActivationKind a, double x) {
  switch (a) {
    case ActivationKind::relu: return x > 0.0 ? x : 0.0;
    case ActivationKind::sigmoid: return 1.0 / (1.0 + std::exp(-x));
    case ActivationKind::tanh: return std::tanh(x);
    case ActivationKind::linear:
    case ActivationKind::softmax: return x;
  }
  return x;
}

inline void softmax_in_place(std::vector<double>& v) {
  if (v.empty()) return;
  const double m = *std::max_element(v.begin(), v.end());
  double sum = 0.0;
  for (auto& x : v) {
    x = std::exp(x - m);
    sum += x;
  }
  for (auto& x : v) x /= sum;
}

/// Lowest index wins ties.
inline std::size_t argmax(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

/// Evaluates one layer given the values emitted by its predecessor.
/// Returns {net_input, output}.
inline std::pair<std::vector<double>, std::vector<double>> evaluate_layer(
    const LayerIR& layer, std::span<const double> prev) {
  if (!layer.has_neurons()) {
    std::vector<double> out(layer.remap.size());
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = prev[layer.remap[p]];
    return {out, out};
  }
  const std::size_t width = layer.width();
  std::vector<double> net(width, 0.0);
  std::vector<double> out(width, 0.0);
  const bool is_max = layer.input_function == InputFunction::max;
  layer.for_each_neuron([&](std::size_t j, const NeuronIR& n) {
    if (n.pruned) return;
    double acc;
    if (is_max) {
      acc = n.in_edges.empty() ? 0.0 : -std::numeric_limits<double>::infinity();
      for (const auto& e : n.in_edges) acc = std::max(acc, prev[e.source] * e.weight);
    } else {
      acc = 0.0;
      for (const auto& e : n.in_edges) acc += prev[e.source] * e.weight;
    }
    acc += n.bias;
    net[j] = acc;
    out[j] = apply_activation(layer.activation, acc);
  });
  if (layer.activation == ActivationKind::softmax) {
    out = net;
    softmax_in_place(out);
  }
  return {std::move(net), std::move(out)};
}

inline void check_input(const NetworkIR& net, std::span<const double> x) {
  if (x.size() != net.input_width())
    throw DimensionError("input has " + std::to_string(x.size()) + " values, network expects " +
                         std::to_string(net.input_width()));
  for (double v : x)
    if (!std::isfinite(v)) throw DimensionError("input contains a non-finite value");
}

inline ActivationTrace forward(const NetworkIR& net, std::span<const double> x) {
  check_input(net, x);
  ActivationTrace t;
  t.net_input.reserve(net.layers.size());
  t.output.reserve(net.layers.size());
  t.net_input.emplace_back(x.begin(), x.end());
  t.output.emplace_back(x.begin(), x.end());
  for (std::size_t l = 1; l < net.layers.size(); ++l) {
    auto [n, o] = evaluate_layer(net.layers[l], t.output[l - 1]);
    t.net_input.push_back(std::move(n));
    t.output.push_back(std::move(o));
  }
  t.decision = argmax(t.output.back());
  return t;
}

// ---------------------------------------------------------------------------
// Interval bounds

struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return lo <= v && v <= hi; }
};

/// Sound per-neuron bounds on net input and output activation.
struct IntervalBounds {
  std::vector<std::vector<Interval>> net_input;
  std::vector<std::vector<Interval>> output;
};

/// Interval arithmetic layer by layer. Sums are accumulated in the same order
/// as forward(), so every forward value lies inside its bound exactly.
inline IntervalBounds propagate_bounds(const NetworkIR& net,
                                       const std::vector<std::pair<double, double>>& input_ranges) {
  if (input_ranges.size() != net.input_width())
    throw DimensionError("expected " + std::to_string(net.input_width()) + " input ranges");
  IntervalBounds b;
  std::vector<Interval> in;
  for (const auto& [lo, hi] : input_ranges) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || lo > hi)
      throw ArgumentError("input ranges must be finite with lo <= hi");
    in.push_back({lo, hi});
  }
  b.net_input.push_back(in);
  b.output.push_back(in);

  for (std::size_t l = 1; l < net.layers.size(); ++l) {
    const LayerIR& layer = net.layers[l];
    const auto& prev = b.output[l - 1];
    if (!layer.has_neurons()) {
      std::vector<Interval> out(layer.remap.size());
      for (std::size_t p = 0; p < out.size(); ++p) out[p] = prev[layer.remap[p]];
      b.net_input.push_back(out);
      b.output.push_back(std::move(out));
      continue;
    }
    const std::size_t width = layer.width();
    std::vector<Interval> net_b(width), out_b(width);
    const bool is_max = layer.input_function == InputFunction::max;
    layer.for_each_neuron([&](std::size_t j, const NeuronIR& n) {
      if (n.pruned) return;
      double lo, hi;
      if (is_max) {
        lo = hi = n.in_edges.empty() ? 0.0 : -std::numeric_limits<double>::infinity();
        for (const auto& e : n.in_edges) {
          const double a = prev[e.source].lo * e.weight, c = prev[e.source].hi * e.weight;
          lo = std::max(lo, std::min(a, c));
          hi = std::max(hi, std::max(a, c));
        }
      } else {
        lo = hi = 0.0;
        for (const auto& e : n.in_edges) {
          const double a = prev[e.source].lo * e.weight, c = prev[e.source].hi * e.weight;
          lo += std::min(a, c);
          hi += std::max(a, c);
        }
      }
      lo += n.bias;
      hi += n.bias;
      net_b[j] = {lo, hi};
      if (layer.activation == ActivationKind::softmax)
        out_b[j] = {0.0, 1.0};
      else
        out_b[j] = {apply_activation(layer.activation, lo), apply_activation(layer.activation, hi)};
    });
    b.net_input.push_back(std::move(net_b));
    b.output.push_back(std::move(out_b));
  }
  return b;
}

inline IntervalBounds propagate_bounds(const NetworkIR& net) {
  return propagate_bounds(net, net.input_ranges());
}

// ---------------------------------------------------------------------------
// Static pruning

/// Drops zero-weight edges and edges whose largest possible |contribution| is
/// below epsilon, then removes hidden neurons that no longer reach the output,
/// sweeping from the output layer down. Max-pool edges are never dropped by magnitude.
inline NetworkIR prune_static(const NetworkIR& net, const IntervalBounds& bounds, double epsilon) {
  if (!(epsilon >= 0.0)) throw ArgumentError("epsilon must be >= 0");
  NetworkIR out = net;
  for (std::size_t l = 1; l < out.layers.size(); ++l) {
    LayerIR& layer = out.layers[l];
    if (!layer.has_neurons() || layer.input_function == InputFunction::max) continue;
    const auto& prev = bounds.output[l - 1];
    layer.for_each_neuron([&](std::size_t, NeuronIR& n) {
      std::erase_if(n.in_edges, [&](const Edge& e) {
        const double m = std::max(std::abs(e.weight * prev[e.source].lo),
                                  std::abs(e.weight * prev[e.source].hi));
        return e.weight == 0.0 || m < epsilon;
      });
    });
  }

  // Reachability sweep, output -> input. Output and input layers stay whole.
  const int last = static_cast<int>(out.layers.size()) - 1;
  for (int l = last; l > 0;) {
    const int p = out.neuron_predecessor(l);
    if (p == 0) break;
    LayerIR& pred = out.layers[static_cast<std::size_t>(p)];
    std::vector<char> used(pred.width(), 0);
    out.layers[static_cast<std::size_t>(l)].for_each_neuron([&](std::size_t, const NeuronIR& n) {
      if (n.pruned) return;
      for (const auto& e : n.in_edges) used[out.resolve_source(l, e.source)] = 1;
    });
    pred.for_each_neuron([&](std::size_t j, NeuronIR& n) {
      if (!used[j]) {
        n.pruned = true;
        n.in_edges.clear();
      }
    });
    l = p;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Relevance

enum class RelevanceScope { winner_only, all_outputs };
enum class RelevanceMode { ratio, cumulative };

inline std::string_view to_string(RelevanceScope s) {
  return s == RelevanceScope::winner_only ? "winner" : "all";
}

inline RelevanceScope parse_scope(std::string_view s) {
  if (s == "winner" || s == "winner_only") return RelevanceScope::winner_only;
  if (s == "all" || s == "all_outputs") return RelevanceScope::all_outputs;
  throw ArgumentError("scope must be 'winner' or 'all'");
}

struct RelevanceOptions {
  double theta = 0.5;
  RelevanceScope scope = RelevanceScope::winner_only;
  RelevanceMode mode = RelevanceMode::ratio;
  double rho = 0.9;  // cumulative mode only

  bool operator==(const RelevanceOptions&) const = default;

  void validate() const {
    if (!(theta >= 0.0 && theta <= 1.0)) throw ArgumentError("theta must lie in [0, 1]");
    if (!(rho > 0.0 && rho <= 1.0)) throw ArgumentError("rho must lie in (0, 1]");
  }
};

/// Largest |v * w| below which a neuron's in-edges are all irrelevant.
inline constexpr double kZeroActivationGuard = 1e-12;

/// Per-input relevance. Flags are indexed [layer][flat neuron] and
/// [layer][flat neuron][in-edge position].
struct RelevanceGraph {
  RelevanceOptions options;
  std::vector<std::vector<char>> retained;
  std::vector<std::vector<std::vector<char>>> edge_relevant;
  std::vector<std::vector<char>> bias_relevant;

  bool neuron_retained(int layer, std::size_t flat) const {
    return retained[static_cast<std::size_t>(layer)][flat] != 0;
  }
  bool edge(int layer, std::size_t flat, std::size_t edge_pos) const {
    return edge_relevant[static_cast<std::size_t>(layer)][flat][edge_pos] != 0;
  }
  std::size_t retained_count(int layer) const {
    const auto& r = retained[static_cast<std::size_t>(layer)];
    return static_cast<std::size_t>(std::count(r.begin(), r.end(), 1));
  }
  std::size_t relevant_edge_count() const {
    std::size_t n = 0;
    for (const auto& layer : edge_relevant)
      for (const auto& neuron : layer) n += static_cast<std::size_t>(std::count(neuron.begin(), neuron.end(), 1));
    return n;
  }
};

namespace detail {

// Local criterion for one neuron: which in-edges (and the virtual bias edge,
// returned last) carry a sufficiently large contribution.
inline std::vector<char> local_relevance(const NeuronIR& n, bool is_max, std::span<const double> prev,
                                         const RelevanceOptions& opt) {
  const std::size_t m = n.in_edges.size();
  std::vector<char> flags(m + 1, 0);
  if (m == 0 && n.bias == 0.0) return flags;
  if (is_max) {
    if (m == 0) return flags;
    std::size_t best = 0;
    for (std::size_t i = 1; i < m; ++i)
      if (prev[n.in_edges[i].source] * n.in_edges[i].weight >
          prev[n.in_edges[best].source] * n.in_edges[best].weight)
        best = i;
    flags[best] = 1;
    return flags;
  }
  std::vector<double> mag(m + 1);
  for (std::size_t i = 0; i < m; ++i) mag[i] = std::abs(prev[n.in_edges[i].source] * n.in_edges[i].weight);
  mag[m] = std::abs(n.bias);
  const double peak = *std::max_element(mag.begin(), mag.end());
  if (peak < kZeroActivationGuard) return flags;

  if (opt.mode == RelevanceMode::ratio) {
    const double cut = opt.theta * peak;
    for (std::size_t i = 0; i <= m; ++i) flags[i] = mag[i] >= cut ? 1 : 0;
    return flags;
  }
  std::vector<std::size_t> order(m + 1);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mag[a] > mag[b]; });
  const double total = std::accumulate(mag.begin(), mag.end(), 0.0);
  double covered = 0.0;
  for (std::size_t i : order) {
    if (covered >= opt.rho * total) break;
    flags[i] = 1;
    covered += mag[i];
  }
  return flags;
}

}  // namespace detail

inline RelevanceGraph relevance(const NetworkIR& net, const ActivationTrace& trace,
                                const RelevanceOptions& opt = {}) {
  opt.validate();
  const std::size_t L = net.layers.size();
  RelevanceGraph g;
  g.options = opt;
  g.retained.resize(L);
  g.edge_relevant.resize(L);
  g.bias_relevant.resize(L);

  // Local criterion everywhere.
  for (std::size_t l = 0; l < L; ++l) {
    const LayerIR& layer = net.layers[l];
    g.retained[l].assign(layer.has_neurons() ? layer.width() : 0, 0);
    if (l == 0 || !layer.has_neurons()) continue;
    auto& edges = g.edge_relevant[l];
    auto& bias = g.bias_relevant[l];
    edges.resize(layer.width());
    bias.assign(layer.width(), 0);
    const bool is_max = layer.input_function == InputFunction::max;
    layer.for_each_neuron([&](std::size_t j, const NeuronIR& n) {
      if (n.pruned) return;
      auto flags = detail::local_relevance(n, is_max, trace.output[l - 1], opt);
      bias[j] = flags.back();
      flags.pop_back();
      edges[j] = std::move(flags);
    });
  }

  // Retention from the output down; an edge stays relevant only if its
  // target is retained, and its source is retained through it.
  auto& out_keep = g.retained[L - 1];
  if (opt.scope == RelevanceScope::winner_only) out_keep[trace.decision] = 1;
  else std::fill(out_keep.begin(), out_keep.end(), 1);

  for (int l = static_cast<int>(L) - 1; l > 0;) {
    const auto lu = static_cast<std::size_t>(l);
    const int p = net.neuron_predecessor(l);
    auto& pred_keep = g.retained[static_cast<std::size_t>(p)];
    net.layers[lu].for_each_neuron([&](std::size_t j, const NeuronIR& n) {
      auto& flags = g.edge_relevant[lu][j];
      if (!g.retained[lu][j]) {
        std::fill(flags.begin(), flags.end(), 0);
        g.bias_relevant[lu][j] = 0;
        return;
      }
      for (std::size_t e = 0; e < n.in_edges.size(); ++e)
        if (flags[e]) pred_keep[net.resolve_source(l, n.in_edges[e].source)] = 1;
    });
    l = p;
  }
  return g;
}

}  // namespace symtree
