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
#include <stdexcept>
#include <vector>

#include "qmap/archspec.hpp"
#include "qmap/mapping.hpp"
#include "qmap/workload.hpp"

namespace qmap {

struct ElementAccess {
  std::int64_t reads = 0;
  std::int64_t writes = 0;
  bool operator==(const ElementAccess&) const = default;
};

// Element accesses per level (innermost first) and tensor.
struct AccessCounts {
  std::vector<std::array<ElementAccess, kNumTensors>> levels;
  bool operator==(const AccessCounts&) const = default;
};

struct TensorTraffic {
  std::int64_t element_reads = 0;
  std::int64_t element_writes = 0;
  std::int64_t word_reads = 0;
  std::int64_t word_writes = 0;
  bool operator==(const TensorTraffic&) const = default;
};

struct LevelMetrics {
  std::array<TensorTraffic, kNumTensors> tensors{};
  double energy_pj = 0.0;
  bool operator==(const LevelMetrics&) const = default;

  std::int64_t word_traffic() const {
    std::int64_t w = 0;
    for (const auto& t : tensors) w += t.word_reads + t.word_writes;
    return w;
  }
};

// Energies in pJ; edp in pJ * cycles.
struct MappingMetrics {
  std::vector<LevelMetrics> levels;
  std::int64_t macs = 0;
  double memory_energy_pj = 0.0;
  double mac_energy_pj = 0.0;
  double total_energy_pj = 0.0;
  std::int64_t cycles = 0;
  double edp = 0.0;

  bool operator==(const MappingMetrics&) const = default;
};

class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Elements of `t` resident at `level`; level -1 denotes the MAC operand
// registers and always holds a single element. Input extents follow the halo
// rule (P_tile - 1) * stride + R_tile (likewise Q/S).
std::int64_t tile_footprint(const Mapping& m, const LayerWorkload& layer, const ArchitectureSpec& arch,
                            int level, Tensor t);

// How many times the tile of `t` held at `level` is (re)loaded over the
// whole execution. Temporal loops above `level` are scanned innermost
// outward; loops over dims irrelevant to `t` are reuse until the first
// relevant loop, from which point every bound multiplies. Unit loops are
// absent.
std::int64_t refetch_count(const Mapping& m, LayerKind kind, int level, Tensor t);

// Transfers between each level holding a tensor and the next outer level
// holding it, with multicast for spatial loops over irrelevant dims. Output
// tiles are read and written back once per reload, except at the outermost
// level where only the final outputs are written.
AccessCounts access_counts(const Mapping& m, const LayerWorkload& layer, const ArchitectureSpec& arch);

// Packs element counts into words, then applies per-word energy, per-MAC
// energy and the bottleneck latency model. Throws ContractViolation when the
// mapping is malformed or breaks a capacity limit.
MappingMetrics evaluate(const Mapping& m, const LayerWorkload& layer, const LayerQuant& q,
                        const ArchitectureSpec& arch);

// Same as evaluate() without the validity checks; callers guarantee them.
MappingMetrics evaluate_unchecked(const Mapping& m, const LayerWorkload& layer, const LayerQuant& q,
                                  const ArchitectureSpec& arch);

}  // namespace qmap
