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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "symtree/analysis.hpp"
#include "symtree/derivation.hpp"
#include "symtree/model.hpp"

namespace symtree {

/// Interning table for config sets: equal sets share one id.
class ConfigStore {
 public:
  std::size_t intern(const ConfigSet& set) {
    auto [it, inserted] = ids_.try_emplace(set, sets_.size());
    if (inserted) {
      sets_.push_back(set);
      refcounts_.push_back(0);
    }
    ++refcounts_[it->second];
    return it->second;
  }

  std::optional<std::size_t> find(const ConfigSet& set) const {
    auto it = ids_.find(set);
    if (it == ids_.end()) return std::nullopt;
    return it->second;
  }

  const ConfigSet& get(std::size_t id) const { return sets_.at(id); }
  std::size_t refcount(std::size_t id) const { return refcounts_.at(id); }
  std::size_t size() const { return sets_.size(); }

  /// Renumbers ids in ascending set order; returns old id -> new id.
  std::vector<std::size_t> canonicalize() {
    std::vector<std::size_t> remap(sets_.size());
    std::vector<ConfigSet> sets;
    std::vector<std::size_t> counts;
    std::size_t next = 0;
    for (auto& [set, id] : ids_) {
      remap[id] = next;
      sets.push_back(set);
      counts.push_back(refcounts_[id]);
      id = next++;
    }
    sets_ = std::move(sets);
    refcounts_ = std::move(counts);
    return remap;
  }

  /// Rebuilds a store from an ordered list of sets (id = position).
  static ConfigStore from_sets(std::vector<ConfigSet> sets) {
    ConfigStore s;
    for (std::size_t i = 0; i < sets.size(); ++i) {
      if (!s.ids_.try_emplace(sets[i], i).second) throw MergeError("duplicate config set in store");
    }
    s.sets_ = std::move(sets);
    s.refcounts_.assign(s.sets_.size(), 0);
    return s;
  }

  bool operator==(const ConfigStore& o) const { return sets_ == o.sets_; }

 private:
  std::map<ConfigSet, std::size_t> ids_;
  std::vector<ConfigSet> sets_;
  std::vector<std::size_t> refcounts_;
};

struct TreeEdgeLabel {
  NeuronId neuron;
  std::size_t config_set = 0;

  auto operator<=>(const TreeEdgeLabel&) const = default;
};

struct DecisionLeaf {
  std::size_t decision = 0;
  std::size_t support = 0;

  bool operator==(const DecisionLeaf&) const = default;
};

struct TreeChild;

/// Trie node. Its state is not stored; state_at() rebuilds it from the
/// labels on the way down.
struct TreeNode {
  std::vector<TreeChild> children;  // canonical label order
  std::optional<DecisionLeaf> leaf;

  bool operator==(const TreeNode&) const;

  /// Neuron examined at this node: the first child's neuron.
  std::optional<NeuronId> test() const;
};

struct TreeChild {
  TreeEdgeLabel label;
  TreeNode node;

  bool operator==(const TreeChild&) const = default;
};

inline bool TreeNode::operator==(const TreeNode& o) const {
  return children == o.children && leaf == o.leaf;
}

inline std::optional<NeuronId> TreeNode::test() const {
  if (children.empty()) return std::nullopt;
  return children.front().label.neuron;
}

struct DecisionTree {
  std::string network_name;
  std::string network_hash;
  RelevanceOptions options;
  double epsilon = 0.0;
  std::vector<std::string> output_labels;
  ConfigStore store;
  TreeNode root;

  bool operator==(const DecisionTree&) const = default;

  std::string decision_label(std::size_t d) const {
    return d < output_labels.size() ? output_labels[d] : std::to_string(d);
  }
};

/// Label sequence of a path: depth-first, parent before its subpath.
struct LinearPath {
  std::vector<TreeEdgeLabel> labels;
  std::size_t decision = 0;
};

namespace detail {

template <class Intern>
void linearize_into(const std::vector<PathEdge>& edges, std::vector<TreeEdgeLabel>& out, Intern&& id_of) {
  for (const auto& e : edges) {
    out.push_back({e.neuron, id_of(edge_input_configs(e))});
    if (e.subpath) linearize_into(*e.subpath, out, id_of);
  }
}

}  // namespace detail

inline LinearPath linearize(const DecisionPath& path, ConfigStore& store) {
  LinearPath lp;
  lp.decision = path.decision;
  detail::linearize_into(path.edges, lp.labels, [&](const ConfigSet& s) { return store.intern(s); });
  return lp;
}

/// Read-only variant; nullopt when some config set is unknown to the store.
inline std::optional<LinearPath> linearize_lookup(const DecisionPath& path, const ConfigStore& store) {
  LinearPath lp;
  lp.decision = path.decision;
  bool ok = true;
  detail::linearize_into(path.edges, lp.labels, [&](const ConfigSet& s) -> std::size_t {
    auto id = store.find(s);
    if (!id) {
      ok = false;
      return 0;
    }
    return *id;
  });
  if (!ok) return std::nullopt;
  return lp;
}

struct MergeInfo {
  std::string network_name;
  std::string network_hash;
  RelevanceOptions options;
  double epsilon = 0.0;
  std::vector<std::string> output_labels;
};

namespace detail {

inline void insert_linear(TreeNode& root, const LinearPath& lp) {
  TreeNode* node = &root;
  for (const auto& label : lp.labels) {
    auto it = std::find_if(node->children.begin(), node->children.end(),
                           [&](const TreeChild& c) { return c.label == label; });
    if (it == node->children.end()) {
      node->children.push_back({label, {}});
      node = &node->children.back().node;
    } else {
      node = &it->node;
    }
  }
  if (node->leaf) {
    if (node->leaf->decision != lp.decision)
      throw MergeError("conflicting decisions for one label sequence");
    ++node->leaf->support;
  } else {
    node->leaf = DecisionLeaf{lp.decision, 1};
  }
}

inline void relabel_and_sort(TreeNode& node, const std::vector<std::size_t>& remap) {
  for (auto& c : node.children) {
    c.label.config_set = remap[c.label.config_set];
    relabel_and_sort(c.node, remap);
  }
  std::sort(node.children.begin(), node.children.end(),
            [](const TreeChild& a, const TreeChild& b) { return a.label < b.label; });
}

}  // namespace detail

/// Prefix-trie merge of linearized paths. Config-set ids are renumbered in
/// set order and children sorted by label, so the result does not depend on
/// the order of `paths`.
inline DecisionTree merge_paths(std::span<const DecisionPath> paths, MergeInfo info = {}) {
  DecisionTree tree;
  tree.network_name = std::move(info.network_name);
  tree.network_hash = std::move(info.network_hash);
  tree.options = info.options;
  tree.epsilon = info.epsilon;
  tree.output_labels = std::move(info.output_labels);
  std::optional<std::size_t> width;
  for (const auto& p : paths) {
    if (width && *width != p.input.size())
      throw MergeError("paths were derived from networks with different input widths");
    width = p.input.size();
    detail::insert_linear(tree.root, linearize(p, tree.store));
  }
  detail::relabel_and_sort(tree.root, tree.store.canonicalize());
  return tree;
}

/// Walks the trie along a label sequence.
inline std::optional<std::size_t> lookup_linear(const DecisionTree& tree, const LinearPath& lp) {
  const TreeNode* node = &tree.root;
  for (const auto& label : lp.labels) {
    auto it = std::lower_bound(node->children.begin(), node->children.end(), label,
                               [](const TreeChild& c, const TreeEdgeLabel& l) { return c.label < l; });
    if (it == node->children.end() || !(it->label == label)) return std::nullopt;
    node = &it->node;
  }
  if (!node->leaf) return std::nullopt;
  return node->leaf->decision;
}

/// Replays the derivation for x and walks the tree. nullopt means no-match.
inline std::optional<std::size_t> tree_lookup(const DecisionTree& tree, std::span<const double> x,
                                              const NetworkIR& net, double theta) {
  if (tree.root.children.empty() && !tree.root.leaf) return std::nullopt;
  RelevanceOptions opt = tree.options;
  opt.theta = theta;
  try {
    const DecisionPath path = derive_for_input(net, x, opt);
    auto lp = linearize_lookup(path, tree.store);
    if (!lp) return std::nullopt;
    return lookup_linear(tree, *lp);
  } catch (const DerivationError&) {
    return std::nullopt;
  }
}

inline std::optional<std::size_t> tree_lookup(const DecisionTree& tree, std::span<const double> x,
                                              const NetworkIR& net) {
  return tree_lookup(tree, x, net, tree.options.theta);
}

/// Union of config sets along a child-index route from the root.
inline ConfigSet state_at(const DecisionTree& tree, std::span<const std::size_t> route) {
  ConfigSet s;
  const TreeNode* node = &tree.root;
  for (std::size_t i : route) {
    const TreeChild& c = node->children.at(i);
    const auto& cs = tree.store.get(c.label.config_set);
    s.insert(cs.begin(), cs.end());
    node = &c.node;
  }
  return s;
}

inline std::size_t count_nodes(const TreeNode& n) {
  std::size_t total = 1;
  for (const auto& c : n.children) total += count_nodes(c.node);
  return total;
}

inline std::size_t count_leaves(const TreeNode& n) {
  std::size_t total = n.leaf ? 1 : 0;
  for (const auto& c : n.children) total += count_leaves(c.node);
  return total;
}

}  // namespace symtree
