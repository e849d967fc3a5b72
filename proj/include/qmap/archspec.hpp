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

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qmap/types.hpp"

namespace qmap {

// Raised for both syntax and semantic problems in an architecture or network
// description. `line`/`column` are 1-based; 0 means no position is known.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, int line = 0, int column = 0);
  int line() const { return line_; }
  int column() const { return column_; }

 private:
  int line_;
  int column_;
};

struct MemoryLevel {
  std::string name;
  bool unbounded = false;
  // One pool for every held tensor, or one partition per tensor.
  bool shared_capacity = true;
  std::int64_t capacity_words = 0;
  std::array<std::int64_t, kNumTensors> partition_words{};
  int word_bits = 16;
  double energy_per_word_access_pj = 0.0;
  double bandwidth_words_per_cycle = 1.0;
  std::array<bool, kNumTensors> tensors_held{};

  bool holds(Tensor t) const { return tensors_held[idx(t)]; }

  // Words available to `t` at this level; nullopt when unbounded. For a
  // shared level this is the pool size.
  std::optional<std::int64_t> capacity_for(Tensor t) const;

  bool operator==(const MemoryLevel&) const = default;
};

struct SpatialFanout {
  // PEs fan out below this level: levels < level_index are private to a PE.
  int level_index = 1;
  int dims_x = 1;
  int dims_y = 1;

  int total_pes() const { return dims_x * dims_y; }
  bool operator==(const SpatialFanout&) const = default;
};

struct ArchitectureSpec {
  std::string name;
  std::vector<MemoryLevel> levels;  // innermost first, DRAM last
  SpatialFanout fanout;
  double energy_per_mac_pj = 0.0;

  int num_levels() const { return static_cast<int>(levels.size()); }
  const MemoryLevel& level(int l) const { return levels.at(static_cast<std::size_t>(l)); }

  bool operator==(const ArchitectureSpec&) const = default;
};

inline constexpr int kMaxLevels = 8;

// Parses the YAML-subset architecture format. Levels appear outermost-first
// in the document and are stored innermost-first.
ArchitectureSpec parse_arch(std::string_view text);
ArchitectureSpec load_arch(const std::filesystem::path& path);

// Emits a document that parse_arch maps back to an equal spec.
std::string serialize_arch(const ArchitectureSpec& spec);

// Digest over the normalized field values, independent of key order and
// formatting of the source document.
std::uint64_t canonical_hash(const ArchitectureSpec& spec);

}  // namespace qmap
