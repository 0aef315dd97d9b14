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

#include <charconv>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "httplib.h"
#include "symtree/pipeline.hpp"

namespace symtree {

struct Response {
  int status = 200;
  std::string body;
};

/// Single-session inspector backend: one immutable network, one current
/// input. Reads run concurrently; a POST that arrives while another POST is
/// being applied is rejected with 409.
class Service {
 public:
  explicit Service(NetworkIR net)
      : net_(std::move(net)), bounds_(propagate_bounds(net_)), hash_(network_hash(net_)) {
    std::vector<double> x;
    for (const auto& [lo, hi] : net_.input_ranges()) x.push_back(lo);
    state_ = std::make_shared<const State>(State{x, forward(net_, x), {}, {}, {}});
  }

  const NetworkIR& network() const { return net_; }

  Response handle(std::string_view method, std::string_view path, std::string_view body = {}) {
    try {
      if (method == "GET" && path == "/network") return get_network();
      if (method == "GET" && path.starts_with("/neuron/")) return get_neuron(path.substr(8));
      if (method == "GET" && path == "/tree") return get_tree();
      if (method == "POST" && path == "/inputs") return mutate([&] { return post_inputs(body); });
      if (method == "POST" && path == "/derive") return mutate([&] { return post_derive(body); });
      return error(404, "no such endpoint");
    } catch (const DimensionError& e) {
      return error(400, e.what());
    } catch (const ArgumentError& e) {
      return error(400, e.what());
    } catch (const ParseError& e) {
      return error(400, e.what());
    } catch (const DerivationError& e) {
      return error(422, e.what());
    }
  }

  /// Holds the mutation slot; while held every POST answers 409.
  std::unique_lock<std::mutex> hold_mutation() { return std::unique_lock(mutation_); }

 private:
  struct State {
    std::vector<double> input;
    ActivationTrace trace;
    std::optional<RelevanceOptions> last_options;
    std::optional<DecisionPath> path;
    std::optional<std::string> tree_json;
  };

  static Response error(int status, std::string_view msg) {
    return {status, canonical_dump(json{{"error", msg}})};
  }

  std::shared_ptr<const State> snapshot() const {
    std::shared_lock lock(state_mutex_);
    return state_;
  }

  void publish(std::shared_ptr<const State> s) {
    std::unique_lock lock(state_mutex_);
    state_ = std::move(s);
  }

  template <class Fn>
  Response mutate(Fn&& fn) {
    std::unique_lock slot(mutation_, std::try_to_lock);
    if (!slot.owns_lock()) return error(409, "another update is in progress");
    return fn();
  }

  json neuron_ref(int layer, std::size_t flat) const {
    auto [f, n] = net_.layers[static_cast<std::size_t>(layer)].locate(flat);
    return {{"layer", layer}, {"filter", f}, {"neuron", n}};
  }

  Response get_network() const {
    auto s = snapshot();
    json layers = json::array();
    for (const auto& layer : net_.layers) {
      json lj = {{"index", layer.index}, {"kind", to_string(layer.kind)}};
      if (!layer.has_neurons()) {
        lj["remap_size"] = layer.remap.size();
      } else {
        lj["activation"] = to_string(layer.activation);
        lj["input_function"] = layer.input_function == InputFunction::max ? "max" : "sum";
        lj["filter_count"] = layer.filters.size();
        json counts = json::array();
        for (const auto& f : layer.filters) counts.push_back(f.neurons.size());
        lj["neuron_counts"] = counts;
      }
      layers.push_back(std::move(lj));
    }
    json labels = json::array();
    for (std::size_t k = 0; k < net_.output_width(); ++k) labels.push_back(net_.output_label(k));
    json doc = {{"name", net_.name},
                {"network_hash", hash_},
                {"layers", layers},
                {"output_labels", labels},
                {"input_spec", input_spec_to_json(net_.input_spec)},
                {"input", s->input},
                {"outputs", s->trace.output.back()},
                {"decision", s->trace.decision}};
    return {200, canonical_dump(doc)};
  }

  Response get_neuron(std::string_view rest) const {
    int ids[3];
    for (int i = 0; i < 3; ++i) {
      const auto slash = rest.find('/');
      const std::string_view part = rest.substr(0, slash);
      auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), ids[i]);
      if (part.empty() || ec != std::errc{} || ptr != part.data() + part.size() || ids[i] < 0)
        return error(404, "malformed neuron id");
      if ((i < 2) == (slash == std::string_view::npos)) return error(404, "malformed neuron id");
      rest = slash == std::string_view::npos ? std::string_view{} : rest.substr(slash + 1);
    }
    const int l = ids[0];
    if (static_cast<std::size_t>(l) >= net_.layers.size()) return error(404, "layer out of range");
    const LayerIR& layer = net_.layers[static_cast<std::size_t>(l)];
    if (!layer.has_neurons() || static_cast<std::size_t>(ids[1]) >= layer.filters.size() ||
        static_cast<std::size_t>(ids[2]) >= layer.filters[static_cast<std::size_t>(ids[1])].neurons.size())
      return error(404, "neuron out of range");

    auto s = snapshot();
    const std::size_t flat = layer.flat_index(ids[1], ids[2]);
    const NeuronIR& n = layer.neuron(flat);
    const auto lu = static_cast<std::size_t>(l);

    json in_edges = json::array();
    double act_sum = 0.0, w_sum = 0.0;
    if (l > 0) {
      const int p = net_.neuron_predecessor(l);
      for (const auto& e : n.in_edges) {
        const double v = s->trace.output[lu - 1][e.source];
        act_sum += v;
        w_sum += e.weight;
        in_edges.push_back({{"source", neuron_ref(p, net_.resolve_source(l, e.source))},
                            {"weight", e.weight},
                            {"activation", v}});
      }
    }
    json out_edges = json::array();
    if (lu + 1 < net_.layers.size()) {
      std::size_t succ = lu + 1;
      while (!net_.layers[succ].has_neurons()) ++succ;
      const int si = static_cast<int>(succ);
      net_.layers[succ].for_each_neuron([&](std::size_t k, const NeuronIR& m) {
        for (const auto& e : m.in_edges)
          if (net_.resolve_source(si, e.source) == flat)
            out_edges.push_back({{"target", neuron_ref(si, k)}, {"weight", e.weight}});
      });
    }
    const std::size_t m = n.in_edges.size();
    json doc = {{"id", {{"layer", l}, {"filter", ids[1]}, {"neuron", ids[2]}}},
                {"kind", to_string(layer.kind)},
                {"activation", to_string(layer.activation)},
                {"bias", n.bias},
                {"filter_bias", layer.filters[static_cast<std::size_t>(ids[1])].bias},
                {"in_edges", in_edges},
                {"out_edges", out_edges},
                {"net_input", s->trace.net_input[lu][flat]},
                {"output", s->trace.output[lu][flat]},
                {"min_output", bounds_.output[lu][flat].lo},
                {"max_output", bounds_.output[lu][flat].hi},
                {"mean_input_activation", m ? json(act_sum / static_cast<double>(m)) : json(nullptr)},
                {"mean_weight", m ? json(w_sum / static_cast<double>(m)) : json(nullptr)}};
    return {200, canonical_dump(doc)};
  }

  Response get_tree() const {
    auto s = snapshot();
    if (!s->tree_json) return error(404, "no tree derived yet");
    return {200, *s->tree_json};
  }

  static json parse_body(std::string_view body) {
    json j = parse_json(body, "request body");
    if (!j.is_object()) throw ParseError("request body must be a JSON object");
    return j;
  }

  Response post_inputs(std::string_view body) {
    const json req = parse_body(body);
    if (!req.contains("vector") || !req.at("vector").is_array())
      throw ParseError("expected {\"vector\": [...]}");
    std::vector<double> x;
    for (const auto& v : req.at("vector")) {
      if (!v.is_number()) throw ParseError("vector entries must be numbers");
      x.push_back(v.get<double>());
    }
    check_domain(net_, x);
    auto next = std::make_shared<State>(State{x, forward(net_, x), {}, {}, {}});
    const json doc = {{"input", x},
                      {"outputs", next->trace.output.back()},
                      {"decision", next->trace.decision},
                      {"decision_label", net_.output_label(next->trace.decision)}};
    publish(std::move(next));
    return {200, canonical_dump(doc)};
  }

  Response post_derive(std::string_view body) {
    const json req = body.empty() ? json::object() : parse_body(body);
    RunOptions opt;
    try {
      opt.relevance.theta = req.value("theta", 0.5);
      opt.epsilon = req.value("epsilon", 0.0);
      opt.relevance.scope = parse_scope(req.value("scope", std::string("winner")));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad derive request: ") + e.what());
    }
    auto cur = snapshot();
    const PathSet set = run_derive(net_, {cur->input}, opt);
    const DecisionTree tree = run_merge(std::span(&set, 1));
    auto next = std::make_shared<State>(*cur);
    next->last_options = opt.relevance;
    next->path = set.paths.front();
    next->tree_json = to_json(tree);
    const json doc = {{"path", path_to_json(*next->path)}, {"tree", tree_to_json(tree)}};
    publish(std::move(next));
    return {200, canonical_dump(doc)};
  }

  const NetworkIR net_;
  const IntervalBounds bounds_;
  const std::string hash_;
  mutable std::shared_mutex state_mutex_;
  std::mutex mutation_;
  std::shared_ptr<const State> state_;
};

/// Binds `service` to an httplib server. The caller owns both.
inline void mount(httplib::Server& server, Service& service) {
  auto forward_to = [&service](const httplib::Request& req, httplib::Response& res) {
    Response r = service.handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_content(r.body, "application/json");
  };
  server.Get(R"(/.*)", forward_to);
  server.Post(R"(/.*)", forward_to);
  server.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });
}

}  // namespace symtree
