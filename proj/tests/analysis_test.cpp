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

#include <gtest/gtest.h>

#include <numeric>

#include "symtree/analysis.hpp"
#include "symtree/demo.hpp"
#include "test_util.hpp"

namespace symtree {
namespace {

using testing::Rng;

// ---------------------------------------------------------------------------
// forward

TEST(Forward, FirstHiddenNetInputIsWeightedCodeSum) {
  // altitude flat (0), temperature warm (1), humidity medium (0.5)
  Rng rng(2);
  testing::DenseSpec s = testing::random_dense_spec(rng);
  s.sizes[0] = 3;
  for (auto& row : s.weights[0]) row.resize(3, 0.7);
  const NetworkIR net = testing::to_network(s);
  const auto t = forward(net, std::vector<double>{0.0, 1.0, 0.5});
  for (std::size_t j = 0; j < s.sizes[1]; ++j) {
    const double w1 = s.weights[0][j][1], w2 = s.weights[0][j][2], b = s.biases[0][j];
    EXPECT_NEAR(t.net_input[1][j], w1 + 0.5 * w2 + b, 1e-12);
  }
}

TEST(Forward, LandscapeFeatureLayer) {
  const NetworkIR net = demo::landscape_network();
  const auto t = forward(net, std::vector<double>{0.0, 1.0, 0.5});
  // warm, cool, steep, flat, wet, dry
  const std::vector<double> want{1.0, 0.0, 0.0, 1.0, 0.0, 0.0};
  for (std::size_t j = 0; j < want.size(); ++j) EXPECT_NEAR(t.output[1][j], want[j], 1e-12);
}

TEST(Forward, ZeroWeightsGiveZeroReluActivations) {
  Rng rng(3);
  testing::DenseSpec s = testing::random_dense_spec(rng, 2, 3);
  for (std::size_t l = 0; l < s.weights.size(); ++l) {
    for (auto& row : s.weights[l]) std::fill(row.begin(), row.end(), 0.0);
    std::fill(s.biases[l].begin(), s.biases[l].end(), 0.0);
    if (l + 1 < s.weights.size()) s.activations[l] = ActivationKind::relu;
  }
  const NetworkIR net = testing::to_network(s);
  const auto t = forward(net, testing::random_input(rng, s.sizes[0]));
  for (std::size_t l = 1; l + 1 < net.layers.size(); ++l)
    for (double v : t.output[l]) EXPECT_EQ(v, 0.0);
}

TEST(Forward, RandomNetworksMatchMatrixOracle) {
  Rng rng(4);
  for (int i = 0; i < 50; ++i) {
    const auto s = testing::random_dense_spec(rng);
    const NetworkIR net = testing::to_network(s);
    const auto x = testing::random_input(rng, s.sizes[0]);
    const auto want = testing::oracle_dense_forward(s, x);
    const auto t = forward(net, x);
    for (std::size_t k = 0; k < want.size(); ++k) EXPECT_NEAR(t.output.back()[k], want[k], 1e-9) << "net " << i;
    if (s.activations.back() == ActivationKind::softmax) {
      EXPECT_NEAR(std::accumulate(t.output.back().begin(), t.output.back().end(), 0.0), 1.0, 1e-9);
    }
  }
}

TEST(Forward, ArgmaxTieBreaksToLowestIndex) {
  EXPECT_EQ(argmax(std::vector<double>{0.2, 0.5, 0.5, 0.1}), 1u);
  EXPECT_EQ(argmax(std::vector<double>{0.3, 0.3}), 0u);
}

TEST(Forward, DimensionAndFinitenessChecks) {
  const NetworkIR net = testing::weak_link_network();
  EXPECT_THROW(forward(net, std::vector<double>{1, 1}), DimensionError);
  EXPECT_THROW(forward(net, std::vector<double>{1, NAN, 1}), DimensionError);
  EXPECT_THROW(forward(net, std::vector<double>{1, INFINITY, 1}), DimensionError);
}

// ---------------------------------------------------------------------------
// bounds

TEST(Bounds, LinearSumOfUnitIntervals) {
  NetworkIR net;
  net.layers.push_back(testing::input_layer(3));
  net.layers.push_back(testing::dense_layer(LayerKind::dense_form, ActivationKind::linear, {{1, 1, 1}}, {}));
  net.layers.push_back(testing::dense_layer(LayerKind::output, ActivationKind::linear, {{1}}, {}));
  finalize(net);
  const auto b = propagate_bounds(net);
  EXPECT_EQ(b.output[1][0].lo, 0.0);
  EXPECT_EQ(b.output[1][0].hi, 3.0);
  EXPECT_EQ(b.output[0][2].hi, 1.0);
}

TEST(Bounds, ReluClipsPreActivationInterval) {
  // pre-activation = 7x - 2 over x in [0, 1] -> [-2, 5]
  NetworkIR net;
  net.layers.push_back(testing::input_layer(1));
  net.layers.push_back(testing::dense_layer(LayerKind::dense_form, ActivationKind::relu, {{7}}, {-2}));
  net.layers.push_back(testing::dense_layer(LayerKind::output, ActivationKind::linear, {{1}}, {}));
  finalize(net);
  const auto b = propagate_bounds(net);
  EXPECT_EQ(b.net_input[1][0].lo, -2.0);
  EXPECT_EQ(b.net_input[1][0].hi, 5.0);
  EXPECT_EQ(b.output[1][0].lo, 0.0);
  EXPECT_EQ(b.output[1][0].hi, 5.0);
}

TEST(Bounds, SoftmaxIsClampedToUnitInterval) {
  const auto b = propagate_bounds(testing::weak_link_network());
  for (const auto& iv : b.output.back()) {
    EXPECT_EQ(iv.lo, 0.0);
    EXPECT_EQ(iv.hi, 1.0);
  }
}

TEST(Bounds, SampledActivationsStayInside) {
  Rng rng(5);
  for (int n = 0; n < 5; ++n) {
    const NetworkIR net = testing::random_network(rng);
    const auto b = propagate_bounds(net);
    for (int i = 0; i < 200; ++i) {
      const auto t = forward(net, testing::random_input(rng, net.input_width()));
      for (std::size_t l = 0; l < net.layers.size(); ++l)
        for (std::size_t j = 0; j < t.output[l].size(); ++j) ASSERT_TRUE(b.output[l][j].contains(t.output[l][j]));
    }
  }
}

TEST(Bounds, RejectsBadRanges) {
  const NetworkIR net = testing::weak_link_network();
  EXPECT_THROW(propagate_bounds(net, {{0, 1}, {0, 1}}), DimensionError);
  EXPECT_THROW(propagate_bounds(net, {{0, 1}, {1, 0}, {0, 1}}), ArgumentError);
}

// ---------------------------------------------------------------------------
// static pruning

std::size_t edge_count(const NetworkIR& net) {
  std::size_t n = 0;
  for (const auto& l : net.layers) l.for_each_neuron([&](std::size_t, const NeuronIR& x) { n += x.in_edges.size(); });
  return n;
}

TEST(Prune, EpsilonZeroRemovesOnlyZeroWeights) {
  Rng rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto s = testing::random_dense_spec(rng, 1, 3, 6, true);
    const NetworkIR net = testing::to_network(s);
    std::size_t zeros = 0;
    for (const auto& W : s.weights)
      for (const auto& row : W)
        for (double w : row) zeros += w == 0.0;
    const NetworkIR p = prune_static(net, propagate_bounds(net), 0.0);
    std::size_t swept = 0;  // edges of neurons removed by the reachability sweep
    for (std::size_t l = 1; l < p.layers.size(); ++l)
      p.layers[l].for_each_neuron([&](std::size_t j, const NeuronIR& n) {
        if (!n.pruned) return;
        for (const auto& e : net.layers[l].neuron(j).in_edges) swept += e.weight != 0.0;
      });
    EXPECT_EQ(edge_count(p), edge_count(net) - zeros - swept);
    p.layers[1].for_each_neuron([&](std::size_t, const NeuronIR& n) {
      for (const auto& e : n.in_edges) EXPECT_NE(e.weight, 0.0);
    });
  }
}

TEST(Prune, NeuronWithoutOutgoingWeightIsRemoved) {
  NetworkIR net;
  net.layers.push_back(testing::input_layer(2));
  net.layers.push_back(testing::dense_layer(LayerKind::dense_form, ActivationKind::relu, {{1, 1}, {1, -1}, {0.5, 0.5}}, {}));
  net.layers.push_back(testing::dense_layer(LayerKind::output, ActivationKind::softmax, {{1, 0, 1}, {1, 0, -1}}, {}));
  finalize(net);
  const NetworkIR p = prune_static(net, propagate_bounds(net), 1e-8);
  EXPECT_FALSE(p.layers[1].neuron(0).pruned);
  EXPECT_TRUE(p.layers[1].neuron(1).pruned);
  EXPECT_TRUE(p.layers[1].neuron(1).in_edges.empty());
  EXPECT_FALSE(p.layers[1].neuron(2).pruned);
  EXPECT_FALSE(net.layers[1].neuron(1).pruned);  // input left untouched
}

TEST(Prune, RemovalCascadesDownward) {
  NetworkIR net;
  net.layers.push_back(testing::input_layer(2));
  net.layers.push_back(testing::dense_layer(LayerKind::dense_form, ActivationKind::relu, {{1, 1}, {1, 1}}, {}));
  net.layers.push_back(testing::dense_layer(LayerKind::dense_form, ActivationKind::relu, {{1, 0}, {0, 1}}, {}));
  net.layers.push_back(testing::dense_layer(LayerKind::output, ActivationKind::linear, {{1, 0}}, {}));
  finalize(net);
  const NetworkIR p = prune_static(net, propagate_bounds(net), 0.0);
  EXPECT_TRUE(p.layers[2].neuron(1).pruned);
  EXPECT_TRUE(p.layers[1].neuron(1).pruned);
  EXPECT_FALSE(p.layers[1].neuron(0).pruned);
}

TEST(Prune, SmallEpsilonKeepsOutputsClose) {
  Rng rng(8);
  for (int n = 0; n < 5; ++n) {
    const NetworkIR net = testing::random_network(rng);
    const NetworkIR p = prune_static(net, propagate_bounds(net), 1e-8);
    for (int i = 0; i < 200; ++i) {
      const auto x = testing::random_input(rng, net.input_width());
      const auto a = forward(net, x).output.back(), b = forward(p, x).output.back();
      for (std::size_t k = 0; k < a.size(); ++k) ASSERT_NEAR(a[k], b[k], 1e-6);
    }
  }
}

TEST(Prune, NegativeEpsilonIsRejected) {
  const NetworkIR net = testing::weak_link_network();
  EXPECT_THROW(prune_static(net, propagate_bounds(net), -1.0), ArgumentError);
}

// ---------------------------------------------------------------------------
// relevance

TEST(Relevance, ThreeFourThreeScenario) {
  const NetworkIR net = testing::weak_link_network();
  const auto t = forward(net, std::vector<double>{1, 1, 1});
  ASSERT_EQ(t.decision, 0u);
  const auto g = relevance(net, t);
  EXPECT_TRUE(g.neuron_retained(1, 0));
  EXPECT_TRUE(g.neuron_retained(1, 1));
  EXPECT_TRUE(g.neuron_retained(1, 2));
  EXPECT_FALSE(g.neuron_retained(1, 3));  // last penultimate neuron
  // second neuron: edges from inputs 0 and 1 relevant, input 2 not
  EXPECT_TRUE(g.edge(1, 1, 0));
  EXPECT_TRUE(g.edge(1, 1, 1));
  EXPECT_FALSE(g.edge(1, 1, 2));
  // nothing flows into the dropped neuron
  for (std::size_t e = 0; e < 3; ++e) EXPECT_FALSE(g.edge(1, 3, e));
  EXPECT_FALSE(g.edge(2, 1, 0));  // non-winning output keeps no edges
}

TEST(Relevance, ThetaOneKeepsOnlyMaximalContributions) {
  Rng rng(9);
  for (int n = 0; n < 10; ++n) {
    const NetworkIR net = testing::random_network(rng);
    const auto t = forward(net, testing::random_input(rng, net.input_width()));
    RelevanceOptions opt;
    opt.theta = 1.0;
    opt.scope = RelevanceScope::all_outputs;
    const auto g = relevance(net, t, opt);
    for (std::size_t l = 1; l < net.layers.size(); ++l)
      net.layers[l].for_each_neuron([&](std::size_t j, const NeuronIR& nr) {
        if (!g.neuron_retained(static_cast<int>(l), j)) return;
        double peak = std::abs(nr.bias);
        for (const auto& e : nr.in_edges) peak = std::max(peak, std::abs(t.output[l - 1][e.source] * e.weight));
        for (std::size_t e = 0; e < nr.in_edges.size(); ++e) {
          const double c = std::abs(t.output[l - 1][nr.in_edges[e].source] * nr.in_edges[e].weight);
          EXPECT_EQ(g.edge(static_cast<int>(l), j, e) != 0, c == peak);
        }
      });
  }
}

TEST(Relevance, ThetaGridIsNestedAndMatchesBruteForce) {
  Rng rng(10);
  const double thetas[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int n = 0; n < 20; ++n) {
    const auto s = testing::random_dense_spec(rng);
    const NetworkIR net = testing::to_network(s);
    const auto x = testing::random_input(rng, s.sizes[0]);
    const auto t = forward(net, x);
    std::set<std::tuple<std::size_t, std::size_t, std::size_t>> prev;
    for (std::size_t k = 0; k < 5; ++k) {
      RelevanceOptions opt;
      opt.theta = thetas[k];
      const auto got = testing::relevant_edge_set(net, relevance(net, t, opt));
      EXPECT_EQ(got, testing::oracle_relevant_edges(s, x, thetas[k], false)) << "net " << n << " theta " << thetas[k];
      if (k > 0) {
        EXPECT_TRUE(std::includes(prev.begin(), prev.end(), got.begin(), got.end()));
      }
      prev = got;
    }
  }
}

TEST(Relevance, AllOutputsScopeIsSuperset) {
  Rng rng(12);
  for (int n = 0; n < 10; ++n) {
    const auto s = testing::random_dense_spec(rng);
    const NetworkIR net = testing::to_network(s);
    const auto x = testing::random_input(rng, s.sizes[0]);
    const auto t = forward(net, x);
    RelevanceOptions all;
    all.scope = RelevanceScope::all_outputs;
    const auto a = testing::relevant_edge_set(net, relevance(net, t, all));
    const auto w = testing::relevant_edge_set(net, relevance(net, t));
    EXPECT_TRUE(std::includes(a.begin(), a.end(), w.begin(), w.end()));
    EXPECT_EQ(a, testing::oracle_relevant_edges(s, x, 0.5, true));
  }
}

TEST(Relevance, BiasActsAsVirtualEdge) {
  // contributions 1 and 0.4, bias 3: cut at 1.5 leaves no input edge relevant
  NetworkIR net;
  net.layers.push_back(testing::input_layer(2));
  net.layers.push_back(testing::dense_layer(LayerKind::dense_form, ActivationKind::relu, {{1, 0.4}}, {3}));
  net.layers.push_back(testing::dense_layer(LayerKind::output, ActivationKind::linear, {{1}}, {}));
  finalize(net);
  const auto g = relevance(net, forward(net, std::vector<double>{1, 1}));
  EXPECT_FALSE(g.edge(1, 0, 0));
  EXPECT_FALSE(g.edge(1, 0, 1));
  EXPECT_TRUE(g.bias_relevant[1][0]);
}

TEST(Relevance, ZeroActivationGuard) {
  NetworkIR net;
  net.layers.push_back(testing::input_layer(2));
  net.layers.push_back(testing::dense_layer(LayerKind::dense_form, ActivationKind::relu, {{1, 1}}, {}));
  net.layers.push_back(testing::dense_layer(LayerKind::output, ActivationKind::linear, {{1}}, {}));
  finalize(net);
  const auto g = relevance(net, forward(net, std::vector<double>{0, 0}));
  EXPECT_FALSE(g.edge(1, 0, 0));
  EXPECT_FALSE(g.edge(1, 0, 1));
}

TEST(Relevance, MaxPoolKeepsOnlyArgmaxEdge) {
  NetworkIR net;
  net.layers.push_back(testing::input_layer(3));
  LayerIR pool = testing::dense_layer(LayerKind::maxpool_form, ActivationKind::linear, {{1, 1, 1}}, {});
  net.layers.push_back(pool);
  net.layers.push_back(testing::dense_layer(LayerKind::output, ActivationKind::linear, {{1}}, {}));
  finalize(net);
  RelevanceOptions opt;
  opt.theta = 0.0;
  const auto g = relevance(net, forward(net, std::vector<double>{0.2, 0.9, 0.8}), opt);
  EXPECT_FALSE(g.edge(1, 0, 0));
  EXPECT_TRUE(g.edge(1, 0, 1));
  EXPECT_FALSE(g.edge(1, 0, 2));
}

TEST(Relevance, CumulativeModeCoversRho) {
  NetworkIR net;
  net.layers.push_back(testing::input_layer(4));
  net.layers.push_back(testing::dense_layer(LayerKind::dense_form, ActivationKind::linear, {{4, 3, 2, 1}}, {}));
  net.layers.push_back(testing::dense_layer(LayerKind::output, ActivationKind::linear, {{1}}, {}));
  finalize(net);
  RelevanceOptions opt;
  opt.mode = RelevanceMode::cumulative;
  opt.rho = 0.65;  // 4 + 3 = 7 of 10
  const auto g = relevance(net, forward(net, std::vector<double>{1, 1, 1, 1}), opt);
  EXPECT_TRUE(g.edge(1, 0, 0));
  EXPECT_TRUE(g.edge(1, 0, 1));
  EXPECT_FALSE(g.edge(1, 0, 2));
  EXPECT_FALSE(g.edge(1, 0, 3));
}

TEST(Relevance, ThetaOutsideUnitIntervalIsRejected) {
  const NetworkIR net = testing::weak_link_network();
  const auto t = forward(net, std::vector<double>{1, 1, 1});
  RelevanceOptions opt;
  opt.theta = 1.5;
  EXPECT_THROW(relevance(net, t, opt), ArgumentError);
  opt.theta = -0.1;
  EXPECT_THROW(relevance(net, t, opt), ArgumentError);
  EXPECT_THROW(parse_scope("some"), ArgumentError);
}

TEST(Relevance, RetainedHiddenNeuronsFeedRetainedSuccessors) {
  Rng rng(13);
  for (int n = 0; n < 20; ++n) {
    const NetworkIR net = testing::random_network(rng, 2, 3);
    const auto g = relevance(net, forward(net, testing::random_input(rng, net.input_width())));
    for (std::size_t l = 1; l + 1 < net.layers.size(); ++l)
      for (std::size_t i = 0; i < net.layers[l].width(); ++i) {
        if (!g.neuron_retained(static_cast<int>(l), i)) continue;
        bool feeds = false;
        net.layers[l + 1].for_each_neuron([&](std::size_t j, const NeuronIR& m) {
          for (std::size_t e = 0; e < m.in_edges.size(); ++e)
            if (m.in_edges[e].source == i && g.edge(static_cast<int>(l + 1), j, e) &&
                g.neuron_retained(static_cast<int>(l + 1), j))
              feeds = true;
        });
        EXPECT_TRUE(feeds);
      }
  }
}

}  // namespace
}  // namespace symtree
