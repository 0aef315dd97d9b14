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

#include "symtree/model.hpp"
#include "test_util.hpp"

namespace symtree {
namespace {

using testing::Rng;

TEST(Interchange, RoundTripRandomNetworks) {
  Rng rng(11);
  for (int i = 0; i < 100; ++i) {
    NetworkIR net = testing::random_network(rng);
    if (rng.coin()) {
      net.output_labels.clear();
      for (std::size_t k = 0; k < net.output_width(); ++k) net.output_labels.push_back("c" + std::to_string(k));
    }
    const std::string bytes = serialize_interchange(net);
    const NetworkIR back = parse_interchange(bytes);
    EXPECT_EQ(back, net) << "network " << i;
    EXPECT_EQ(serialize_interchange(back), bytes) << "network " << i;
  }
}

TEST(Interchange, SerializationIsDeterministic) {
  Rng a(5), b(5);
  EXPECT_EQ(serialize_interchange(testing::random_network(a)), serialize_interchange(testing::random_network(b)));
}

TEST(Interchange, FloatsKeepSeventeenDigits) {
  const std::string s = canonical_dump(json{{"b", 0.1}, {"a", 2.5}});
  EXPECT_EQ(s, "{\"a\":2.5,\"b\":0.10000000000000001}\n");
}

TEST(Interchange, EmptyLayerListIsRejected) {
  try {
    parse_interchange(R"({"name":"x","layers":[]})");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("no layers"), std::string::npos);
  }
}

TEST(Interchange, MalformedDocumentsAreRejected) {
  EXPECT_THROW(parse_interchange("{not json"), ParseError);
  EXPECT_THROW(parse_interchange("[]"), ParseError);
  // edge source past the predecessor's width
  EXPECT_THROW(parse_interchange(R"({"layers":[
      {"kind":"input","filters":[{"bias":0,"neurons":[{"in_edges":[]}]}]},
      {"kind":"output","filters":[{"bias":0,"neurons":[{"in_edges":[[3,1.0]]}]}]}]})"),
               ShapeError);
  // output kind in the middle
  EXPECT_THROW(parse_interchange(R"({"layers":[
      {"kind":"input","filters":[{"bias":0,"neurons":[{}]}]},
      {"kind":"output","filters":[{"bias":0,"neurons":[{"in_edges":[[0,1.0]]}]}]},
      {"kind":"output","filters":[{"bias":0,"neurons":[{"in_edges":[[0,1.0]]}]}]}]})"),
               ShapeError);
}

TEST(Interchange, ThreeFourThreeCounts) {
  const NetworkIR net = testing::weak_link_network();
  ASSERT_EQ(net.layers.size(), 3u);
  std::size_t edges = 0, biased = 0;
  for (std::size_t l = 1; l < net.layers.size(); ++l)
    net.layers[l].for_each_neuron([&](std::size_t, const NeuronIR& n) {
      edges += n.in_edges.size();
      ++biased;
    });
  EXPECT_EQ(edges, 3u * 4u + 4u * 3u);
  EXPECT_EQ(biased, 7u);
  EXPECT_EQ(net.input_width(), 3u);
  EXPECT_EQ(net.output_width(), 3u);
}

TEST(Interchange, MissingInputSpecDefaultsToUnitRange) {
  const NetworkIR net = parse_interchange(R"({"layers":[
      {"kind":"input","filters":[{"bias":0,"neurons":[{},{}]}]},
      {"kind":"output","activation":"linear","filters":[{"bias":0.5,"neurons":[{"in_edges":[[0,1.0],[1,-1.0]]}]}]}]})");
  ASSERT_EQ(net.input_spec.inputs.size(), 2u);
  EXPECT_EQ(net.input_spec.inputs[1].name, "x1");
  EXPECT_EQ(net.input_spec.inputs[1].symbols[0].label, "value");
  EXPECT_EQ(net.input_ranges()[0], std::make_pair(0.0, 1.0));
  EXPECT_EQ(net.layers[1].neuron(0).bias, 0.5);
}

TEST(Interchange, OverlappingMatchersAreRejected) {
  NetworkIR net = testing::weak_link_network();
  net.input_spec.inputs[0].symbols.push_back(testing::interval("dup", 0.2, 0.7, false));
  EXPECT_THROW(finalize(net), ParseError);
}

TEST(Interchange, TouchingHalfOpenMatchersDoNotOverlap) {
  NetworkIR net = testing::weak_link_network();
  EXPECT_NO_THROW(finalize(net));
  net.input_spec.inputs[0].symbols[0].hi_closed = true;  // [0, .5] and [.5, 1]
  EXPECT_THROW(finalize(net), ParseError);
}

TEST(NeuronIndexing, FlatIndexAndLocateAreInverse) {
  LayerIR l;
  l.filters.resize(3);
  l.filters[0].neurons.resize(2);
  l.filters[1].neurons.resize(4);
  l.filters[2].neurons.resize(1);
  for (std::size_t flat = 0; flat < 7; ++flat) {
    auto [f, n] = l.locate(flat);
    EXPECT_EQ(l.flat_index(f, n), flat);
  }
  EXPECT_EQ(l.locate(2), std::make_pair(1, 0));
  EXPECT_THROW(l.locate(7), std::out_of_range);
}

TEST(ContentHash, KnownVectors) {
  // FNV-1a 64 reference values.
  EXPECT_EQ(content_hash(""), "cbf29ce484222325");
  EXPECT_EQ(content_hash("a"), "af63dc4c8601ec8c");
}

}  // namespace
}  // namespace symtree
