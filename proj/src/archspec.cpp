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

#include "qmap/archspec.hpp"

#include <yaml-cpp/yaml.h>

#include <fstream>
#include <set>
#include <sstream>

#include "qmap/util.hpp"
#include "yaml_support.hpp"

namespace qmap {

ParseError::ParseError(const std::string& what, int line, int column)
    : std::runtime_error(line > 0 ? std::to_string(line) + ":" + std::to_string(column) + ": " + what
                                  : what),
      line_(line),
      column_(column) {}

std::optional<std::int64_t> MemoryLevel::capacity_for(Tensor t) const {
  if (unbounded) return std::nullopt;
  return shared_capacity ? capacity_words : partition_words[idx(t)];
}

namespace {

using yaml_support::fail;
using yaml_support::get_bool;
using yaml_support::get_double;
using yaml_support::get_int;
using yaml_support::get_string;
using yaml_support::require;
using yaml_support::reject_unknown_keys;

MemoryLevel parse_level(const YAML::Node& node) {
  if (!node.IsMap()) fail(node, "level entry must be a mapping");
  reject_unknown_keys(node, {"name", "capacity_words", "unbounded", "word_bits",
                             "energy_per_word_access_pj", "bandwidth_words_per_cycle", "tensors",
                             "shared"});
  MemoryLevel level;
  level.name = get_string(require(node, "name"));
  if (level.name.empty()) fail(node, "level name must not be empty");

  const YAML::Node tensors = require(node, "tensors");
  if (!tensors.IsSequence() || tensors.size() == 0)
    fail(tensors, "level '" + level.name + "': tensors must be a nonempty list");
  for (const auto& t : tensors) {
    const auto tensor = tensor_from_name(get_string(t));
    if (!tensor) fail(t, "level '" + level.name + "': unknown tensor name '" + get_string(t) + "'");
    if (level.tensors_held[idx(*tensor)]) fail(t, "level '" + level.name + "': duplicate tensor");
    level.tensors_held[idx(*tensor)] = true;
  }

  level.shared_capacity = node["shared"] ? get_bool(node["shared"]) : true;
  level.unbounded = node["unbounded"] ? get_bool(node["unbounded"]) : false;
  const YAML::Node capacity = node["capacity_words"];
  if (level.unbounded) {
    if (capacity) fail(capacity, "level '" + level.name + "': unbounded level takes no capacity");
  } else {
    if (!capacity) fail(node, "level '" + level.name + "': capacity_words or unbounded required");
    if (capacity.IsMap()) {
      if (level.shared_capacity)
        fail(capacity, "level '" + level.name + "': per-tensor capacities need shared: false");
      for (const auto& kv : capacity) {
        const auto tensor = tensor_from_name(kv.first.as<std::string>());
        if (!tensor)
          fail(kv.first, "level '" + level.name + "': unknown tensor name '" +
                             kv.first.as<std::string>() + "'");
        if (!level.holds(*tensor))
          fail(kv.first, "level '" + level.name + "': capacity given for a tensor it does not hold");
        level.partition_words[idx(*tensor)] = get_int(kv.second);
      }
      for (Tensor t : kAllTensors) {
        if (level.holds(t) && level.partition_words[idx(t)] < 1)
          fail(capacity, "level '" + level.name + "': capacity for " + std::string(tensor_name(t)) +
                             " must be >= 1");
      }
    } else {
      const std::int64_t words = get_int(capacity);
      if (words < 1) fail(capacity, "level '" + level.name + "': capacity_words must be >= 1");
      if (level.shared_capacity) {
        level.capacity_words = words;
      } else {
        for (Tensor t : kAllTensors)
          if (level.holds(t)) level.partition_words[idx(t)] = words;
      }
    }
  }

  const YAML::Node bits = require(node, "word_bits");
  level.word_bits = static_cast<int>(get_int(bits));
  if (level.word_bits != 8 && level.word_bits != 16 && level.word_bits != 32 &&
      level.word_bits != 64)
    fail(bits, "level '" + level.name + "': word_bits must be one of 8, 16, 32, 64");

  const YAML::Node energy = require(node, "energy_per_word_access_pj");
  level.energy_per_word_access_pj = get_double(energy);
  if (level.energy_per_word_access_pj < 0.0)
    fail(energy, "level '" + level.name + "': energy must be non-negative");

  const YAML::Node bw = require(node, "bandwidth_words_per_cycle");
  level.bandwidth_words_per_cycle = get_double(bw);
  if (!(level.bandwidth_words_per_cycle > 0.0))
    fail(bw, "level '" + level.name + "': bandwidth must be positive");
  return level;
}

ArchitectureSpec parse_arch_node(const YAML::Node& root) {
  if (!root.IsMap()) fail(root, "architecture document must be a mapping");
  reject_unknown_keys(root, {"name", "levels", "fanout", "energy_per_mac_pj"});

  ArchitectureSpec spec;
  spec.name = get_string(require(root, "name"));

  const YAML::Node levels = require(root, "levels");
  if (!levels.IsSequence()) fail(levels, "levels must be a list");
  if (levels.size() < 2) fail(levels, "at least two memory levels are required");
  if (levels.size() > static_cast<std::size_t>(kMaxLevels))
    fail(levels, "at most " + std::to_string(kMaxLevels) + " memory levels are supported");

  // Document order is outermost first.
  std::set<std::string> names;
  for (auto it = levels.begin(); it != levels.end(); ++it) {
    MemoryLevel level = parse_level(*it);
    if (!names.insert(level.name).second) fail(*it, "duplicate level name '" + level.name + "'");
    spec.levels.insert(spec.levels.begin(), std::move(level));
  }
  const MemoryLevel& top = spec.levels.back();
  for (Tensor t : kAllTensors) {
    if (!top.holds(t))
      fail(levels, "outermost level '" + top.name + "' must hold " + std::string(tensor_name(t)));
  }

  const YAML::Node fanout = require(root, "fanout");
  if (!fanout.IsMap()) fail(fanout, "fanout must be a mapping");
  reject_unknown_keys(fanout, {"x", "y", "below_level", "pes"});
  spec.fanout.dims_x = static_cast<int>(get_int(require(fanout, "x")));
  spec.fanout.dims_y = static_cast<int>(get_int(require(fanout, "y")));
  if (spec.fanout.dims_x < 1 || spec.fanout.dims_y < 1) fail(fanout, "fanout dims must be >= 1");
  if (const YAML::Node pes = fanout["pes"]) {
    const std::int64_t budget = get_int(pes);
    if (static_cast<std::int64_t>(spec.fanout.total_pes()) != budget)
      fail(pes, "fanout " + std::to_string(spec.fanout.dims_x) + "x" +
                    std::to_string(spec.fanout.dims_y) + " does not match PE budget " +
                    std::to_string(budget));
  }
  const YAML::Node below = require(fanout, "below_level");
  const std::string below_name = get_string(below);
  spec.fanout.level_index = -1;
  for (int l = 0; l < spec.num_levels(); ++l)
    if (spec.level(l).name == below_name) spec.fanout.level_index = l;
  if (spec.fanout.level_index < 0) fail(below, "fanout refers to unknown level '" + below_name + "'");

  const YAML::Node mac = require(root, "energy_per_mac_pj");
  spec.energy_per_mac_pj = get_double(mac);
  if (spec.energy_per_mac_pj < 0.0) fail(mac, "energy_per_mac_pj must be non-negative");
  return spec;
}

}  // namespace

ArchitectureSpec parse_arch(std::string_view text) {
  return parse_arch_node(yaml_support::load(text));
}

ArchitectureSpec load_arch(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open architecture file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_arch(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ":" + e.what());
  }
}

std::string serialize_arch(const ArchitectureSpec& spec) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << spec.name;
  out << YAML::Key << "energy_per_mac_pj" << YAML::Value << spec.energy_per_mac_pj;
  out << YAML::Key << "fanout" << YAML::Value << YAML::Flow << YAML::BeginMap;
  out << YAML::Key << "x" << YAML::Value << spec.fanout.dims_x;
  out << YAML::Key << "y" << YAML::Value << spec.fanout.dims_y;
  out << YAML::Key << "below_level" << YAML::Value << spec.level(spec.fanout.level_index).name;
  out << YAML::EndMap;
  out << YAML::Key << "levels" << YAML::Value << YAML::BeginSeq;
  for (auto it = spec.levels.rbegin(); it != spec.levels.rend(); ++it) {
    const MemoryLevel& level = *it;
    out << YAML::BeginMap;
    out << YAML::Key << "name" << YAML::Value << level.name;
    if (level.unbounded) {
      out << YAML::Key << "unbounded" << YAML::Value << true;
    } else if (level.shared_capacity) {
      out << YAML::Key << "capacity_words" << YAML::Value << level.capacity_words;
    } else {
      out << YAML::Key << "capacity_words" << YAML::Value << YAML::Flow << YAML::BeginMap;
      for (Tensor t : kAllTensors)
        if (level.holds(t))
          out << YAML::Key << std::string(tensor_name(t)) << YAML::Value
              << level.partition_words[idx(t)];
      out << YAML::EndMap;
    }
    out << YAML::Key << "word_bits" << YAML::Value << level.word_bits;
    out << YAML::Key << "energy_per_word_access_pj" << YAML::Value
        << level.energy_per_word_access_pj;
    out << YAML::Key << "bandwidth_words_per_cycle" << YAML::Value
        << level.bandwidth_words_per_cycle;
    out << YAML::Key << "tensors" << YAML::Value << YAML::Flow << YAML::BeginSeq;
    for (Tensor t : kAllTensors)
      if (level.holds(t)) out << std::string(tensor_name(t));
    out << YAML::EndSeq;
    out << YAML::Key << "shared" << YAML::Value << level.shared_capacity;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

std::uint64_t canonical_hash(const ArchitectureSpec& spec) {
  Fnv1a h;
  h.str("qmap-arch-v1").str(spec.name).f64(spec.energy_per_mac_pj);
  h.i64(spec.fanout.level_index).i64(spec.fanout.dims_x).i64(spec.fanout.dims_y);
  h.u64(spec.levels.size());
  for (const MemoryLevel& level : spec.levels) {
    h.str(level.name).u64(level.unbounded).u64(level.shared_capacity);
    h.i64(level.unbounded ? 0 : level.capacity_words);
    for (Tensor t : kAllTensors) {
      h.u64(level.holds(t));
      h.i64(level.shared_capacity || level.unbounded ? 0 : level.partition_words[idx(t)]);
    }
    h.i64(level.word_bits).f64(level.energy_per_word_access_pj).f64(level.bandwidth_words_per_cycle);
  }
  return h.digest();
}

}  // namespace qmap
