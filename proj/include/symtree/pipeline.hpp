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
#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "symtree/analysis.hpp"
#include "symtree/derivation.hpp"
#include "symtree/export.hpp"
#include "symtree/keras.hpp"
#include "symtree/merging.hpp"
#include "symtree/model.hpp"

namespace symtree {

struct RunOptions {
  RelevanceOptions relevance;
  double epsilon = 0.0;

  void validate() const {
    relevance.validate();
    if (!(epsilon >= 0.0)) throw ArgumentError("epsilon must be >= 0");
  }
};

/// Paths derived from one network, plus what is needed to merge them.
struct PathSet {
  std::string network_name;
  std::string network_hash;
  RunOptions options;
  std::vector<std::string> output_labels;
  std::vector<DecisionPath> paths;
};

inline std::string network_hash(const NetworkIR& net) {
  return content_hash(serialize_interchange(net));
}

/// Bounds over the input domains, then static pruning at epsilon.
inline NetworkIR prepare_network(const NetworkIR& net, double epsilon) {
  return prune_static(net, propagate_bounds(net), epsilon);
}

inline void check_domain(const NetworkIR& net, std::span<const double> x) {
  check_input(net, x);
  const auto ranges = net.input_ranges();
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] < ranges[i].first || x[i] > ranges[i].second)
      throw DimensionError("input " + std::to_string(i) + " (" + net.input_spec.inputs[i].name +
                           ") lies outside its domain");
}

/// One vector per line, comma separated; '#' starts a comment.
inline std::vector<std::vector<double>> parse_inputs(std::string_view text) {
  std::vector<std::vector<double>> out;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto trim = [](std::string_view s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string_view::npos) return std::string_view{};
      return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    std::vector<double> row;
    while (true) {
      const auto comma = line.find(',');
      const std::string_view field = trim(line.substr(0, comma));
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
      if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError("inputs line " + std::to_string(line_no) + ": bad number '" +
                         std::string(field) + "'");
      row.push_back(v);
      if (comma == std::string_view::npos) break;
      line = line.substr(comma + 1);
    }
    out.push_back(std::move(row));
  }
  return out;
}

/// Import: model archive or interchange document -> canonical interchange.
inline std::string run_import(std::string_view model_bytes) {
  return serialize_interchange(load_network(model_bytes));
}

/// Derive: bounds -> prune(epsilon) -> per input trace/relevance/path.
inline PathSet run_derive(const NetworkIR& net, const std::vector<std::vector<double>>& inputs,
                          const RunOptions& opt) {
  opt.validate();
  for (const auto& x : inputs) check_domain(net, x);
  const NetworkIR pruned = prepare_network(net, opt.epsilon);
  PathSet set;
  set.network_name = net.name;
  set.network_hash = network_hash(net);
  set.options = opt;
  set.output_labels = net.output_labels;
  set.paths.reserve(inputs.size());
  for (const auto& x : inputs) set.paths.push_back(derive_for_input(pruned, x, opt.relevance));
  return set;
}

/// Merge one or more path sets; they must come from the same network and
/// the same derivation options.
inline DecisionTree run_merge(std::span<const PathSet> sets) {
  if (sets.empty()) throw MergeError("nothing to merge");
  const PathSet& first = sets.front();
  std::vector<DecisionPath> all;
  for (const auto& s : sets) {
    if (s.network_hash != first.network_hash)
      throw MergeError("path sets come from different networks (hash " + s.network_hash + " vs " +
                       first.network_hash + ")");
    if (!(s.options.relevance == first.options.relevance) || s.options.epsilon != first.options.epsilon)
      throw MergeError("path sets were derived with different options");
    all.insert(all.end(), s.paths.begin(), s.paths.end());
  }
  return merge_paths(all, {first.network_name, first.network_hash, first.options.relevance,
                           first.options.epsilon, first.output_labels});
}

inline json pathset_to_json(const PathSet& s) {
  json paths = json::array();
  for (const auto& p : s.paths) paths.push_back(path_to_json(p));
  json doc = {{"network_name", s.network_name},
              {"network_hash", s.network_hash},
              {"theta", s.options.relevance.theta},
              {"scope", to_string(s.options.relevance.scope)},
              {"mode", s.options.relevance.mode == RelevanceMode::ratio ? "ratio" : "cumulative"},
              {"epsilon", s.options.epsilon},
              {"paths", paths}};
  if (s.options.relevance.mode == RelevanceMode::cumulative) doc["rho"] = s.options.relevance.rho;
  if (!s.output_labels.empty()) doc["output_labels"] = s.output_labels;
  return doc;
}

inline PathSet pathset_from_json(const json& doc) {
  try {
    PathSet s;
    s.network_name = doc.at("network_name").get<std::string>();
    s.network_hash = doc.at("network_hash").get<std::string>();
    s.options.relevance.theta = doc.at("theta").get<double>();
    s.options.relevance.scope = parse_scope(doc.value("scope", std::string("winner")));
    s.options.relevance.mode = doc.value("mode", std::string("ratio")) == "cumulative"
                                   ? RelevanceMode::cumulative
                                   : RelevanceMode::ratio;
    s.options.relevance.rho = doc.value("rho", 0.9);
    s.options.epsilon = doc.value("epsilon", 0.0);
    if (doc.contains("output_labels"))
      s.output_labels = doc.at("output_labels").get<std::vector<std::string>>();
    for (const auto& p : doc.at("paths")) s.paths.push_back(path_from_json(p));
    return s;
  } catch (const json::exception& e) {
    throw ParseError(std::string("malformed paths document: ") + e.what());
  }
}

inline std::string serialize_pathset(const PathSet& s) { return canonical_dump(pathset_to_json(s)); }
inline PathSet read_pathset(std::string_view text) { return pathset_from_json(parse_json(text, "paths document")); }

}  // namespace symtree
