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
#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "symtree/model.hpp"

namespace symtree {

enum class Padding { valid, same };

inline Padding parse_padding(std::string_view s) {
  if (s == "valid") return Padding::valid;
  if (s == "same") return Padding::same;
  throw ParseError("unknown padding '" + std::string(s) + "'");
}

/// Spatial extent plus channel count of a channels-last activation tensor.
/// A plain vector of n values is {spatial = {}, channels = n}.
struct ShapeND {
  std::vector<std::size_t> spatial;
  std::size_t channels = 1;

  bool operator==(const ShapeND&) const = default;

  std::size_t spatial_size() const {
    return std::accumulate(spatial.begin(), spatial.end(), std::size_t{1}, std::multiplies<>{});
  }
  std::size_t size() const { return spatial_size() * channels; }
};

/// Kernel layout is [spatial..., in_channels, out_channels], row-major.
struct ConvSpec {
  int rank = 1;
  std::vector<std::size_t> kernel_dims;
  std::size_t in_channels = 1;
  std::size_t out_channels = 1;
  std::vector<double> kernel;
  std::vector<std::size_t> strides;
  Padding padding = Padding::valid;
  std::vector<double> bias;  // one per output channel; empty means zeros
  ActivationKind activation = ActivationKind::linear;

  double tap(const std::vector<std::size_t>& k, std::size_t ci, std::size_t co) const {
    std::size_t idx = 0;
    for (std::size_t d = 0; d < k.size(); ++d) idx = idx * kernel_dims[d] + k[d];
    return kernel[(idx * in_channels + ci) * out_channels + co];
  }
};

namespace detail {

inline void check_window_args(int rank, const ShapeND& in, const std::vector<std::size_t>& window,
                              const std::vector<std::size_t>& strides) {
  if (rank < 1 || rank > 3) throw ShapeError("rank must be 1, 2 or 3");
  const auto r = static_cast<std::size_t>(rank);
  if (in.spatial.size() != r) throw ShapeError("input rank does not match layer rank");
  if (window.size() != r || strides.size() != r) throw ShapeError("window/stride rank mismatch");
  for (std::size_t d = 0; d < r; ++d) {
    if (window[d] < 1) throw ShapeError("kernel dims must be >= 1");
    if (strides[d] < 1) throw ShapeError("strides must be >= 1");
    if (in.spatial[d] < 1) throw ShapeError("input dims must be >= 1");
  }
  if (in.channels < 1) throw ShapeError("channel count must be >= 1");
}

// Advances a row-major multi-index; returns false after the last position.
inline bool next_index(std::vector<std::size_t>& idx, const std::vector<std::size_t>& extent) {
  for (std::size_t d = idx.size(); d-- > 0;) {
    if (++idx[d] < extent[d]) return true;
    idx[d] = 0;
  }
  return false;
}

inline std::size_t row_major(const std::vector<std::size_t>& idx,
                             const std::vector<std::size_t>& extent) {
  std::size_t flat = 0;
  for (std::size_t d = 0; d < idx.size(); ++d) flat = flat * extent[d] + idx[d];
  return flat;
}

// Low-side padding per dimension; the odd unit goes on the high side.
inline std::vector<std::size_t> pad_before(const ShapeND& in, const ShapeND& out,
                                           const std::vector<std::size_t>& window,
                                           const std::vector<std::size_t>& strides,
                                           Padding padding) {
  std::vector<std::size_t> pad(in.spatial.size(), 0);
  if (padding == Padding::valid) return pad;
  for (std::size_t d = 0; d < pad.size(); ++d) {
    const std::size_t needed = (out.spatial[d] - 1) * strides[d] + window[d];
    const std::size_t total = needed > in.spatial[d] ? needed - in.spatial[d] : 0;
    pad[d] = total / 2;
  }
  return pad;
}

// Calls fn(output_spatial_flat, input_spatial_flat, tap_flat, tap_index) for
// every in-bounds tap of every window, row-major over outputs then taps.
template <class Fn>
void for_each_tap(const ShapeND& in, const ShapeND& out, const std::vector<std::size_t>& window,
                  const std::vector<std::size_t>& strides, Padding padding, Fn&& fn) {
  const auto pad = pad_before(in, out, window, strides, padding);
  const std::size_t rank = in.spatial.size();
  std::vector<std::size_t> o(rank, 0);
  std::vector<std::size_t> pos(rank, 0);
  std::size_t o_flat = 0;
  do {
    std::vector<std::size_t> k(rank, 0);
    std::size_t k_flat = 0;
    do {
      bool inside = true;
      for (std::size_t d = 0; d < rank && inside; ++d) {
        const std::size_t p = o[d] * strides[d] + k[d];
        if (p < pad[d] || p - pad[d] >= in.spatial[d]) inside = false;
        else pos[d] = p - pad[d];
      }
      if (inside) fn(o_flat, row_major(pos, in.spatial), k_flat, k);
      ++k_flat;
    } while (next_index(k, window));
    ++o_flat;
  } while (next_index(o, out.spatial));
}

}  // namespace detail

/// Output spatial extent of a windowed layer; channels are carried over.
inline ShapeND compute_output_shape(int rank, const ShapeND& in,
                                    const std::vector<std::size_t>& kernel_dims,
                                    const std::vector<std::size_t>& strides, Padding padding) {
  detail::check_window_args(rank, in, kernel_dims, strides);
  ShapeND out{{}, in.channels};
  for (std::size_t d = 0; d < in.spatial.size(); ++d) {
    const std::size_t n = in.spatial[d], k = kernel_dims[d], s = strides[d];
    if (padding == Padding::valid) {
      if (k > n)
        throw ShapeError("kernel extent " + std::to_string(k) + " exceeds input extent " +
                         std::to_string(n) + " under valid padding");
      out.spatial.push_back((n - k) / s + 1);
    } else {
      out.spatial.push_back((n + s - 1) / s);
    }
  }
  return out;
}

/// Convolution as a sparsely connected layer: one filter per output channel,
/// one neuron per output position, one edge per in-bounds kernel tap.
inline LayerIR lower_conv(const ConvSpec& spec, const ShapeND& in) {
  if (spec.in_channels != in.channels)
    throw ShapeError("conv expects " + std::to_string(spec.in_channels) + " input channels, got " +
                     std::to_string(in.channels));
  const ShapeND out_shape =
      compute_output_shape(spec.rank, in, spec.kernel_dims, spec.strides, spec.padding);
  const std::size_t taps = std::accumulate(spec.kernel_dims.begin(), spec.kernel_dims.end(),
                                           std::size_t{1}, std::multiplies<>{});
  if (spec.kernel.size() != taps * spec.in_channels * spec.out_channels)
    throw ShapeError("kernel size does not match kernel_dims x in_channels x out_channels");
  if (!spec.bias.empty() && spec.bias.size() != spec.out_channels)
    throw ShapeError("bias length does not match filter count");

  const std::size_t in_spatial = in.spatial_size();
  const std::size_t out_spatial = out_shape.spatial_size();

  LayerIR layer;
  layer.kind = LayerKind::dense_form;
  layer.activation = spec.activation;
  layer.input_function = InputFunction::sum;
  layer.filters.resize(spec.out_channels);
  for (std::size_t co = 0; co < spec.out_channels; ++co) {
    auto& f = layer.filters[co];
    f.bias = spec.bias.empty() ? 0.0 : spec.bias[co];
    f.neurons.resize(out_spatial);
    for (auto& n : f.neurons) n.bias = f.bias;
  }
  detail::for_each_tap(in, out_shape, spec.kernel_dims, spec.strides, spec.padding,
                       [&](std::size_t o, std::size_t i, std::size_t, const std::vector<std::size_t>& k) {
                         for (std::size_t co = 0; co < spec.out_channels; ++co)
                           for (std::size_t ci = 0; ci < spec.in_channels; ++ci)
                             layer.filters[co].neurons[o].in_edges.push_back(
                                 {ci * in_spatial + i, spec.tap(k, ci, co)});
                       });
  for (auto& f : layer.filters)
    for (auto& n : f.neurons)
      std::sort(n.in_edges.begin(), n.in_edges.end(),
                [](const Edge& a, const Edge& b) { return a.source < b.source; });
  return layer;
}

/// Max-pooling as a max-input layer with unit weights, per channel.
inline LayerIR lower_maxpool(int rank, const std::vector<std::size_t>& pool_dims,
                             const std::vector<std::size_t>& strides, Padding padding,
                             const ShapeND& in) {
  const ShapeND out_shape = compute_output_shape(rank, in, pool_dims, strides, padding);
  const std::size_t in_spatial = in.spatial_size();
  LayerIR layer;
  layer.kind = LayerKind::maxpool_form;
  layer.activation = ActivationKind::linear;
  layer.input_function = InputFunction::max;
  layer.filters.resize(in.channels);
  for (auto& f : layer.filters) f.neurons.resize(out_shape.spatial_size());
  detail::for_each_tap(in, out_shape, pool_dims, strides, padding,
                       [&](std::size_t o, std::size_t i, std::size_t, const std::vector<std::size_t>&) {
                         for (std::size_t c = 0; c < in.channels; ++c)
                           layer.filters[c].neurons[o].in_edges.push_back({c * in_spatial + i, 1.0});
                       });
  return layer;
}

/// Flatten of a channels-last tensor: output position p = s * C + c reads the
/// channel-major flat index c * S + s of the preceding layer.
inline LayerIR lower_flatten(const ShapeND& in) {
  LayerIR layer;
  layer.kind = LayerKind::flatten_remap;
  layer.activation = ActivationKind::linear;
  const std::size_t S = in.spatial_size(), C = in.channels;
  layer.remap.resize(S * C);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t c = 0; c < C; ++c) layer.remap[s * C + c] = c * S + s;
  return layer;
}

/// Input layer matching a channels-last shape: one filter per channel.
inline LayerIR make_input_layer(const ShapeND& shape) {
  LayerIR layer;
  layer.kind = LayerKind::input;
  layer.activation = ActivationKind::linear;
  if (shape.spatial.empty()) {
    layer.filters.resize(1);
    layer.filters[0].neurons.resize(shape.channels);
  } else {
    layer.filters.resize(shape.channels);
    for (auto& f : layer.filters) f.neurons.resize(shape.spatial_size());
  }
  return layer;
}

}  // namespace symtree
