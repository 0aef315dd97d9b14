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

#include <string>
#include <vector>

#include "symtree/model.hpp"

namespace symtree::demo {

namespace detail {

inline NeuronIR neuron(std::vector<Edge> edges, double bias) {
  NeuronIR n;
  n.in_edges = std::move(edges);
  n.bias = bias;
  return n;
}

inline LayerIR dense(LayerKind kind, ActivationKind act, std::vector<NeuronIR> neurons) {
  LayerIR l;
  l.kind = kind;
  l.activation = act;
  l.filters.push_back({std::move(neurons), 0.0});
  return l;
}

}  // namespace detail

/// Landscape classifier over (altitude, temperature, humidity), 3-6-7-7.
/// The first hidden layer detects warm/cool/steep/flat/wet/dry, the second
/// combines them into one soft gate per class, the output is a softmax over
/// mountain, swamp, forest, steppe, mangrove, jungle, savannah.
inline NetworkIR landscape_network() {
  using detail::neuron;
  NetworkIR net;
  net.name = "landscape";

  auto interval = [](std::string label, double lo, double hi, bool closed) {
    return SymbolMatcher{std::move(label), std::nullopt, lo, hi, closed};
  };
  net.input_spec.inputs = {
      {"altitude", {interval("flat", 0.0, 0.5, false), interval("steep", 0.5, 1.0, true)}},
      {"temperature", {interval("cool", 0.0, 0.5, false), interval("warm", 0.5, 1.0, true)}},
      {"humidity",
       {interval("dry", 0.0, 0.33, false), interval("medium", 0.33, 0.66, false),
        interval("wet", 0.66, 1.0, true)}},
  };
  net.output_labels = {"mountain", "swamp", "forest", "steppe", "mangrove", "jungle", "savannah"};

  enum : std::size_t { alt = 0, temp = 1, hum = 2 };
  LayerIR input = detail::dense(LayerKind::input, ActivationKind::linear,
                                std::vector<NeuronIR>(3));

  LayerIR features = detail::dense(LayerKind::dense_form, ActivationKind::relu,
                                   {
                                       neuron({{temp, 1.0}}, 0.0),         // warm
                                       neuron({{temp, -1.0}}, 1.0),        // cool
                                       neuron({{alt, 1.0}}, 0.0),          // steep
                                       neuron({{alt, -1.0}}, 1.0),         // flat
                                       neuron({{hum, 2.0}}, -1.0),         // wet
                                       neuron({{hum, -2.0}}, 1.0),         // dry
                                   });
  enum : std::size_t { warm = 0, cool, steep, flat, wet, dry };

  constexpr double g = 6.0;
  auto gate = [&](std::vector<std::pair<std::size_t, double>> terms, double offset) {
    std::vector<Edge> edges;
    for (auto [src, w] : terms) edges.push_back({src, g * w});
    return neuron(std::move(edges), -g * offset);
  };
  LayerIR classes = detail::dense(
      LayerKind::dense_form, ActivationKind::sigmoid,
      {
          gate({{steep, 1.0}}, 0.5),                                          // mountain
          gate({{flat, 1.0}, {cool, 1.0}, {wet, 1.0}}, 2.5),                  // swamp
          gate({{flat, 1.0}, {cool, 1.0}, {wet, -1.0}, {dry, -1.0}}, 1.5),    // forest
          gate({{flat, 1.0}, {cool, 1.0}, {dry, 1.0}}, 2.5),                  // steppe
          gate({{flat, 1.0}, {warm, 1.0}, {wet, 1.0}}, 2.5),                  // mangrove
          gate({{flat, 1.0}, {warm, 1.0}, {wet, -1.0}, {dry, -1.0}}, 1.5),    // jungle
          gate({{flat, 1.0}, {warm, 1.0}, {dry, 1.0}}, 2.5),                  // savannah
      });

  std::vector<NeuronIR> out;
  for (std::size_t k = 0; k < 7; ++k) {
    std::vector<Edge> edges;
    for (std::size_t m = 0; m < 7; ++m) edges.push_back({m, k == m ? 4.0 : -1.0});
    out.push_back(neuron(std::move(edges), 0.0));
  }
  LayerIR output = detail::dense(LayerKind::output, ActivationKind::softmax, std::move(out));

  net.layers = {std::move(input), std::move(features), std::move(classes), std::move(output)};
  finalize(net);
  return net;
}

/// 5 x 5 x 8 grid over the unit cube: 200 landscape inputs.
inline std::vector<std::vector<double>> landscape_grid() {
  std::vector<std::vector<double>> grid;
  for (int a = 0; a < 5; ++a)
    for (int t = 0; t < 5; ++t)
      for (int h = 0; h < 8; ++h) grid.push_back({a / 4.0, t / 4.0, h / 7.0});
  return grid;
}

}  // namespace symtree::demo
