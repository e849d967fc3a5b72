/* Copyright 2026 The qmap Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "catch_amalgamated.hpp"
#include "fixtures.hpp"
#include "qmap/workload.hpp"

using namespace qmap;
using namespace qmap::testing;

TEST_CASE("MAC counts") {
  CHECK(layer_macs(make_layer(LayerKind::Standard, 1, 1, 1, 1, 1, 1, 1)) == 1);
  CHECK(layer_macs(make_layer(LayerKind::Standard, 1, 8, 3, 4, 4, 3, 3)) == 3456);
  CHECK(layer_macs(make_layer(LayerKind::Depthwise, 1, 4, 4, 2, 2, 3, 3)) == 144);
}

TEST_CASE("model size counts weight bits") {
  NetworkSpec one{"one", {make_layer(LayerKind::Standard, 1, 1, 1, 1, 1, 1, 1)}};
  one.layers[0].name = "a";
  CHECK(model_size_bits(one, QuantConfig{{{8, 8, 8}}}) == 8);

  NetworkSpec net{"n", {make_layer(LayerKind::Standard, 1, 2, 3, 5, 5, 3, 3)}};
  CHECK(model_size_bits(net, QuantConfig{{{8, 4, 8}}}) == 216);
  CHECK(model_size_bits(net, QuantConfig{{{8, 8, 8}}}) == 2 * 216);

  const auto v1 = load_network(net_path("mobilenet_v1"));
  const auto full = model_size_bits(v1, decode_genome(Genome::uniform(v1.size(), 8), v1));
  const auto half = model_size_bits(v1, decode_genome(Genome::uniform(v1.size(), 4), v1));
  CHECK(full == 2 * half);
}

TEST_CASE("genome decoding chains output widths") {
  NetworkSpec net{"two",
                  {make_layer(LayerKind::Standard, 1, 4, 3, 2, 2, 1, 1), make_layer(LayerKind::Standard, 1, 2, 4, 2, 2, 1, 1)}};
  net.layers[0].name = "a";
  net.layers[1].name = "b";
  const auto q = decode_genome(parse_genome("4,6,8,3"), net);
  REQUIRE(q.layers.size() == 2);
  CHECK(q.layers[0] == LayerQuant{4, 6, 8});
  CHECK(q.layers[1] == LayerQuant{8, 3, 8});
  CHECK(encode_genome(q) == parse_genome("4,6,8,3"));

  CHECK_THROWS_AS(decode_genome(parse_genome("4,9,8,3"), net), GenomeError);
  CHECK_THROWS_AS(decode_genome(parse_genome("4,1,8,3"), net), GenomeError);
  CHECK_THROWS_AS(decode_genome(parse_genome("4,6,8"), net), GenomeError);
  CHECK_THROWS_AS(parse_genome("4,x"), GenomeError);
}

TEST_CASE("uniform 8 decodes to 8 everywhere") {
  const auto v1 = load_network(net_path("mobilenet_v1"));
  CHECK(v1.size() == 28);
  const auto q = decode_genome(Genome::uniform(v1.size(), 8), v1);
  for (const auto& l : q.layers) CHECK(l == LayerQuant::uniform(8));
  CHECK(format_genome(Genome::uniform(2, 8)) == "8,8,8,8");
}

TEST_CASE("network files") {
  const auto toy = load_network(net_path("toy"));
  CHECK(toy.size() == 6);
  REQUIRE(toy.find("dw1") != nullptr);
  CHECK(toy.find("dw1")->kind == LayerKind::Depthwise);
  CHECK(toy.find("dw1")->bound(Dim::M) == 1);
  CHECK(toy.find("conv1")->stride == 2);
  CHECK(toy.find("nope") == nullptr);

  const auto single = load_network(net_path("toy_dw"));
  CHECK(single.size() == 1);

  CHECK(load_network(net_path("mobilenet_v2")).size() == 53);

  CHECK_THROWS_AS(parse_network("name: x\nlayers:\n  - {name: d, kind: depthwise, c: 4, m: 8, p: 2, q: 2, r: 3, s: 3}\n"),
                  ParseError);
  CHECK_THROWS_AS(parse_network("name: x\nlayers: []\n"), ParseError);
  CHECK_THROWS_AS(parse_network("name: x\nlayers:\n  - {name: a, kind: standard, c: 0}\n"), ParseError);
  CHECK_THROWS_AS(parse_network("name: x\nlayers:\n  - {name: a, kind: conv, c: 1}\n"), ParseError);
  CHECK_THROWS_AS(load_network(net_path("does_not_exist")), ParseError);
}

TEST_CASE("network hash ignores nothing that matters") {
  const auto a = load_network(net_path("toy"));
  auto b = a;
  CHECK(network_hash(a) == network_hash(b));
  b.layers[2].stride = 2;
  CHECK(network_hash(a) != network_hash(b));
}
