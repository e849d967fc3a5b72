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
#include "qmap/archspec.hpp"

using namespace qmap;
using namespace qmap::testing;

namespace {

const char* kSmall = R"(name: small
energy_per_mac_pj: 0.5
levels:
  - name: DRAM
    unbounded: true
    word_bits: 16
    energy_per_word_access_pj: 100
    bandwidth_words_per_cycle: 4
    tensors: [Input, Weight, Output]
  - name: Buf
    capacity_words: 64
    word_bits: 16
    energy_per_word_access_pj: 1
    bandwidth_words_per_cycle: 2
    tensors: [Input, Weight, Output]
fanout: {x: 2, y: 2, below_level: DRAM}
)";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("bundled architectures") {
  const auto eyeriss = load_arch(arch_path("eyeriss"));
  CHECK(eyeriss.fanout.dims_x == 14);
  CHECK(eyeriss.fanout.dims_y == 12);
  CHECK(eyeriss.fanout.total_pes() == 168);
  CHECK(eyeriss.num_levels() == 3);
  for (const auto& l : eyeriss.levels) CHECK(l.word_bits == 16);
  CHECK(eyeriss.levels.back().unbounded);

  const auto simba = load_arch(arch_path("simba"));
  CHECK(simba.fanout.total_pes() == 256);
  for (const auto& l : simba.levels) CHECK(l.word_bits == 16);
}

TEST_CASE("levels are stored innermost first") {
  const auto a = parse_arch(kSmall);
  REQUIRE(a.num_levels() == 2);
  CHECK(a.level(0).name == "Buf");
  CHECK(a.level(1).name == "DRAM");
  CHECK(a.fanout.level_index == 1);
  CHECK(a.level(0).capacity_for(Tensor::Weight) == 64);
  CHECK(!a.level(1).capacity_for(Tensor::Weight).has_value());
  CHECK(a.level(0).bandwidth_words_per_cycle == 2.0);
}

TEST_CASE("serialize round-trips") {
  for (const char* name : {"eyeriss", "simba"}) {
    const auto a = load_arch(arch_path(name));
    const auto b = parse_arch(serialize_arch(a));
    CHECK(a == b);
    CHECK(canonical_hash(a) == canonical_hash(b));
  }
  const auto small = parse_arch(kSmall);
  CHECK(parse_arch(serialize_arch(small)) == small);
}

TEST_CASE("hash is canonical") {
  const std::string reordered = replace(kSmall, "name: small\nenergy_per_mac_pj: 0.5\n", "energy_per_mac_pj: 0.5\nname: small\n");
  CHECK(canonical_hash(parse_arch(kSmall)) == canonical_hash(parse_arch(reordered)));

  const auto eyeriss = load_arch(arch_path("eyeriss"));
  const auto simba = load_arch(arch_path("simba"));
  CHECK(canonical_hash(eyeriss) != canonical_hash(simba));
  auto narrow = eyeriss;
  narrow.levels[0].word_bits = 8;
  CHECK(canonical_hash(eyeriss) != canonical_hash(narrow));
}

TEST_CASE("semantic and syntax errors") {
  const std::string base = kSmall;
  CHECK_THROWS_AS(parse_arch(replace(base, "capacity_words: 64", "capacity_words: 0")), ParseError);
  CHECK_THROWS_AS(parse_arch(replace(base, "word_bits: 16\n    energy_per_word_access_pj: 1", "word_bits: 12\n    energy_per_word_access_pj: 1")), ParseError);
  CHECK_THROWS_AS(parse_arch(replace(base, "below_level: DRAM", "below_level: Nowhere")), ParseError);
  CHECK_THROWS_AS(parse_arch(replace(base, "tensors: [Input, Weight, Output]\n  - name: Buf", "tensors: [Input, Weight]\n  - name: Buf")), ParseError);
  CHECK_THROWS_AS(parse_arch(replace(base, "x: 2", "x: 0")), ParseError);
  CHECK_THROWS_AS(parse_arch(replace(base, "name: Buf", "name: DRAM")), ParseError);
  CHECK_THROWS_AS(parse_arch(replace(base, "energy_per_mac_pj: 0.5", "energy_per_mac_pj: fast")), ParseError);
  CHECK_THROWS_AS(parse_arch(replace(base, "energy_per_mac_pj: 0.5", "energy_per_mac_pj: 0.5\ncolour: red")), ParseError);
  CHECK_THROWS_AS(parse_arch(replace(base, "    bandwidth_words_per_cycle: 2\n", "")), ParseError);
  CHECK_THROWS_AS(parse_arch("levels: [\n"), ParseError);
  CHECK_THROWS_AS(load_arch(arch_path("missing")), ParseError);

  try {
    parse_arch(replace(base, "capacity_words: 64", "capacity_words: -3"));
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.line() > 0);
  }
}

TEST_CASE("per-tensor partitions") {
  const auto simba = load_arch(arch_path("simba"));
  const MemoryLevel* pe = nullptr;
  for (const auto& l : simba.levels)
    if (l.name == "PEBuffer") pe = &l;
  REQUIRE(pe != nullptr);
  CHECK(!pe->shared_capacity);
  CHECK(pe->capacity_for(Tensor::Weight) == 128);
  CHECK(pe->capacity_for(Tensor::Input) == 32);
}
