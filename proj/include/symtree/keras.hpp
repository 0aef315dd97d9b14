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

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "symtree/lowering.hpp"
#include "symtree/model.hpp"

namespace symtree {

/// Dense row-major array, as dumped by the framework.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;
};

/// Weight groups keyed "<layer_name>/kernel" and "<layer_name>/bias".
using WeightTable = std::map<std::string, Tensor>;

namespace detail {

inline void flatten_nested(const json& j, std::size_t depth, Tensor& t) {
  if (j.is_array()) {
    if (t.shape.size() == depth) t.shape.push_back(j.size());
    else if (t.shape[depth] != j.size()) throw ShapeError("ragged weight array");
    for (const auto& e : j) flatten_nested(e, depth + 1, t);
    return;
  }
  if (!j.is_number()) throw ParseError("weight arrays must contain numbers");
  if (depth != t.shape.size()) throw ShapeError("ragged weight array");
  t.data.push_back(j.get<double>());
}

inline std::vector<std::size_t> int_list(const json& cfg, const char* key, std::size_t rank,
                                         std::optional<std::vector<std::size_t>> fallback) {
  if (!cfg.contains(key) || cfg.at(key).is_null()) {
    if (fallback) return *fallback;
    throw ParseError(std::string("missing '") + key + "'");
  }
  const json& v = cfg.at(key);
  if (v.is_number_integer()) return std::vector<std::size_t>(rank, v.get<std::size_t>());
  auto out = v.get<std::vector<std::size_t>>();
  if (out.size() != rank) throw ShapeError(std::string("'") + key + "' has the wrong rank");
  return out;
}

// Per-sample shape from a batch shape such as [null, 28, 28, 1].
inline ShapeND shape_from_batch(const json& batch) {
  std::vector<std::size_t> dims;
  for (std::size_t i = 1; i < batch.size(); ++i) {
    if (!batch[i].is_number_unsigned()) throw ShapeError("input shape must be fully specified");
    dims.push_back(batch[i].get<std::size_t>());
  }
  if (dims.empty()) throw ShapeError("input shape is empty");
  ShapeND s;
  s.channels = dims.back();
  dims.pop_back();
  s.spatial = std::move(dims);
  return s;
}

inline std::optional<ShapeND> declared_input_shape(const json& cfg) {
  for (const char* key : {"batch_input_shape", "batch_shape"})
    if (cfg.contains(key) && cfg.at(key).is_array()) return shape_from_batch(cfg.at(key));
  if (cfg.contains("input_shape") && cfg.at("input_shape").is_array()) {
    json batch = json::array({nullptr});
    for (const auto& d : cfg.at("input_shape")) batch.push_back(d);
    return shape_from_batch(batch);
  }
  return std::nullopt;
}

inline const Tensor& weight(const WeightTable& table, const std::string& layer, const char* part) {
  auto it = table.find(layer + "/" + part);
  if (it == table.end()) throw ParseError("missing weight group '" + layer + "/" + part + "'");
  return it->second;
}

inline std::vector<double> bias_for(const WeightTable& table, const std::string& name,
                                    const json& cfg, std::size_t units) {
  if (!cfg.value("use_bias", true)) return std::vector<double>(units, 0.0);
  const Tensor& b = weight(table, name, "bias");
  if (b.shape.size() != 1 || b.shape[0] != units)
    throw ShapeError("bias of '" + name + "' must have shape [" + std::to_string(units) + "]");
  return b.data;
}

inline ActivationKind activation_of(const json& cfg) {
  const json& a = cfg.contains("activation") ? cfg.at("activation") : json("linear");
  if (a.is_string()) return parse_activation(a.get<std::string>());
  // Keras 3 may serialize activations as {"class_name": ..., "config": {...}}.
  if (a.is_object() && a.contains("config") && a.at("config").contains("name"))
    return parse_activation(a.at("config").at("name").get<std::string>());
  throw ParseError("unrecognised activation entry");
}

}  // namespace detail

inline Tensor tensor_from_json(const json& j) {
  Tensor t;
  detail::flatten_nested(j, 0, t);
  return t;
}

inline WeightTable weight_table_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("weight table must be an object");
  WeightTable table;
  for (const auto& [key, value] : j.items()) table[key] = tensor_from_json(value);
  return table;
}

/// Builds the feedforward form of a Keras-style Sequential model: Dense layers
/// keep their full kernel, convolution/pooling/flatten layers are lowered.
inline NetworkIR parse_model_archive(std::string_view model_config_text, const WeightTable& weights,
                                     const InputSpec& input_spec = {},
                                     std::vector<std::string> output_labels = {}) {
  const json config = parse_json(model_config_text, "model_config");
  const json& layers =
      config.contains("config") && config.at("config").is_object()
          ? detail::require(config.at("config"), "layers", "model_config.config")
          : detail::require(config, "layers", "model_config");
  if (!layers.is_array() || layers.empty()) throw ParseError("no layers");

  NetworkIR net;
  if (config.contains("config") && config.at("config").contains("name"))
    net.name = config.at("config").at("name").get<std::string>();

  std::optional<ShapeND> shape;
  try {
    for (const auto& entry : layers) {
      const std::string cls = detail::require(entry, "class_name", "layer").get<std::string>();
      const json cfg = entry.value("config", json::object());
      const std::string name = cfg.value("name", cls);

      if (!shape) {
        shape = detail::declared_input_shape(cfg);
        if (!shape) throw ShapeError("first layer does not declare an input shape");
        net.layers.push_back(make_input_layer(*shape));
      }
      if (cls == "InputLayer") continue;

      if (cls == "Dense") {
        if (!shape->spatial.empty())
          throw ShapeError("Dense layer '" + name + "' needs a flat input; add a Flatten layer");
        const std::size_t in = shape->channels;
        const std::size_t units = cfg.at("units").get<std::size_t>();
        const Tensor& k = detail::weight(weights, name, "kernel");
        if (k.shape != std::vector<std::size_t>{in, units})
          throw ShapeError("kernel of '" + name + "' must have shape [" + std::to_string(in) + ", " +
                           std::to_string(units) + "]");
        const auto bias = detail::bias_for(weights, name, cfg, units);
        LayerIR layer;
        layer.kind = LayerKind::dense_form;
        layer.activation = detail::activation_of(cfg);
        layer.filters.resize(1);
        layer.filters[0].bias = 0.0;
        for (std::size_t u = 0; u < units; ++u) {
          NeuronIR n;
          n.bias = bias[u];
          for (std::size_t i = 0; i < in; ++i) n.in_edges.push_back({i, k.data[i * units + u]});
          layer.filters[0].neurons.push_back(std::move(n));
        }
        net.layers.push_back(std::move(layer));
        *shape = ShapeND{{}, units};
      } else if (cls == "Conv1D" || cls == "Conv2D" || cls == "Conv3D") {
        const int rank = cls[4] - '0';
        const auto r = static_cast<std::size_t>(rank);
        if (cfg.value("data_format", std::string("channels_last")) != "channels_last")
          throw ParseError("only channels_last convolutions are supported");
        for (const char* key : {"dilation_rate"}) {
          if (cfg.contains(key)) {
            auto d = detail::int_list(cfg, key, r, std::nullopt);
            for (auto v : d)
              if (v != 1) throw ParseError("dilated convolutions are not supported");
          }
        }
        if (cfg.value("groups", 1) != 1) throw ParseError("grouped convolutions are not supported");
        ConvSpec spec;
        spec.rank = rank;
        spec.kernel_dims = detail::int_list(cfg, "kernel_size", r, std::nullopt);
        spec.strides = detail::int_list(cfg, "strides", r, std::vector<std::size_t>(r, 1));
        spec.padding = parse_padding(cfg.value("padding", std::string("valid")));
        spec.in_channels = shape->channels;
        spec.out_channels = cfg.at("filters").get<std::size_t>();
        spec.activation = detail::activation_of(cfg);
        const Tensor& k = detail::weight(weights, name, "kernel");
        std::vector<std::size_t> expected = spec.kernel_dims;
        expected.push_back(spec.in_channels);
        expected.push_back(spec.out_channels);
        if (k.shape != expected)
          throw ShapeError("kernel of '" + name + "' is inconsistent with kernel_size/filters");
        spec.kernel = k.data;
        spec.bias = detail::bias_for(weights, name, cfg, spec.out_channels);
        net.layers.push_back(lower_conv(spec, *shape));
        *shape = compute_output_shape(rank, *shape, spec.kernel_dims, spec.strides, spec.padding);
        shape->channels = spec.out_channels;
      } else if (cls == "MaxPooling1D" || cls == "MaxPooling2D" || cls == "MaxPooling3D") {
        const int rank = cls[10] - '0';
        const auto r = static_cast<std::size_t>(rank);
        const auto pool = detail::int_list(cfg, "pool_size", r, std::vector<std::size_t>(r, 2));
        const auto strides = detail::int_list(cfg, "strides", r, pool);
        const Padding padding = parse_padding(cfg.value("padding", std::string("valid")));
        net.layers.push_back(lower_maxpool(rank, pool, strides, padding, *shape));
        *shape = compute_output_shape(rank, *shape, pool, strides, padding);
      } else if (cls == "Flatten") {
        net.layers.push_back(lower_flatten(*shape));
        *shape = ShapeND{{}, shape->size()};
      } else {
        throw ParseError("unsupported layer class '" + cls + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed model_config: ") + e.what());
  }

  if (net.layers.size() < 2) throw ShapeError("model has no layers past the input");
  LayerIR& last = net.layers.back();
  if (last.kind != LayerKind::dense_form)
    throw ShapeError("the last layer must be Dense or a convolution");
  last.kind = LayerKind::output;
  net.input_spec = input_spec;
  net.output_labels = std::move(output_labels);
  finalize(net);
  return net;
}

/// Reads a Keras-style archive document:
/// {"model_config": <string|object>, "weights": {...}, "input_spec"?, "output_labels"?}.
inline NetworkIR parse_model_archive_document(const json& doc) {
  const json& mc = detail::require(doc, "model_config", "archive");
  const std::string text = mc.is_string() ? mc.get<std::string>() : mc.dump();
  InputSpec spec;
  std::vector<std::string> labels;
  try {
    if (doc.contains("input_spec")) spec = input_spec_from_json(doc.at("input_spec"));
    if (doc.contains("output_labels"))
      labels = doc.at("output_labels").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed archive: ") + e.what());
  }
  return parse_model_archive(text, weight_table_from_json(detail::require(doc, "weights", "archive")),
                             spec, std::move(labels));
}

/// Accepts either an interchange document or a Keras-style archive.
inline NetworkIR load_network(std::string_view bytes) {
  const json doc = parse_json(bytes, "model file");
  if (doc.is_object() && doc.contains("model_config")) return parse_model_archive_document(doc);
  return from_interchange_json(doc);
}

}  // namespace symtree
