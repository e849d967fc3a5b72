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

#include "qmap/costmodel.hpp"

#include <algorithm>
#include <cmath>

#include "qmap/mapspace.hpp"
#include "qmap/packing.hpp"

namespace qmap {

std::int64_t tile_footprint(const Mapping& m, const LayerWorkload& layer, const ArchitectureSpec& arch,
                            int level, Tensor t) {
  if (level < 0) return 1;
  auto cum = [&](Dim d) { return cumulative_factor(m, arch, level, d); };
  switch (t) {
    case Tensor::Weight:
      return cum(Dim::M) * cum(Dim::C) * cum(Dim::R) * cum(Dim::S);
    case Tensor::Output: {
      const Dim channel = layer.kind == LayerKind::Depthwise ? Dim::C : Dim::M;
      return cum(Dim::N) * cum(channel) * cum(Dim::P) * cum(Dim::Q);
    }
    case Tensor::Input: {
      const std::int64_t h = (cum(Dim::P) - 1) * layer.stride + cum(Dim::R);
      const std::int64_t w = (cum(Dim::Q) - 1) * layer.stride + cum(Dim::S);
      return cum(Dim::N) * cum(Dim::C) * h * w;
    }
  }
  return 0;
}

std::int64_t refetch_count(const Mapping& m, LayerKind kind, int level, Tensor t) {
  std::int64_t count = 1;
  bool reuse_broken = false;
  for (std::size_t l = static_cast<std::size_t>(level + 1); l < m.levels.size(); ++l) {
    const LevelTiling& tiling = m.levels[l];
    for (Dim d : tiling.order) {
      const std::int64_t bound = tiling.factors[idx(d)];
      if (bound == 1) continue;
      if (!reuse_broken && !relevant(kind, t, d)) continue;
      reuse_broken = true;
      count *= bound;
    }
  }
  return count;
}

AccessCounts access_counts(const Mapping& m, const LayerWorkload& layer, const ArchitectureSpec& arch) {
  const int num_levels = arch.num_levels();
  const int fanout = arch.fanout.level_index;
  std::int64_t spatial_all = 1;
  for (Dim d : kAllDims) spatial_all *= m.spatial[idx(d)];

  AccessCounts out;
  out.levels.assign(static_cast<std::size_t>(num_levels), {});
  for (Tensor t : kAllTensors) {
    const auto ti = idx(t);
    std::int64_t spatial_relevant = 1;
    for (Dim d : kAllDims)
      if (relevant(layer.kind, t, d)) spatial_relevant *= m.spatial[idx(d)];

    int child = -1;  // the MAC operand registers
    for (int parent = 0; parent < num_levels; ++parent) {
      if (!arch.level(parent).holds(t)) continue;
      const std::int64_t tile = tile_footprint(m, layer, arch, child, t);
      const std::int64_t loads = tile * refetch_count(m, layer.kind, child, t);
      const std::int64_t child_instances = child < fanout ? spatial_all : 1;
      const bool crosses_fanout = child < fanout && parent >= fanout;
      const std::int64_t child_events = loads * child_instances;
      const std::int64_t parent_events = loads * (crosses_fanout ? spatial_relevant : child_instances);
      auto& p = out.levels[static_cast<std::size_t>(parent)][ti];
      if (t != Tensor::Output) {
        p.reads += parent_events;
        if (child >= 0) out.levels[static_cast<std::size_t>(child)][ti].writes += child_events;
      } else {
        if (parent == num_levels - 1) {
          p.writes = tile_footprint(m, layer, arch, parent, t);
        } else {
          p.reads += parent_events;
          p.writes += parent_events;
        }
        if (child >= 0) {
          auto& c = out.levels[static_cast<std::size_t>(child)][ti];
          c.reads += child_events;
          c.writes += child_events;
        }
      }
      child = parent;
    }
  }
  return out;
}

MappingMetrics evaluate_unchecked(const Mapping& m, const LayerWorkload& layer, const LayerQuant& q,
                                  const ArchitectureSpec& arch) {
  const AccessCounts counts = access_counts(m, layer, arch);
  const int num_levels = arch.num_levels();
  std::int64_t active_pes = 1;
  for (Dim d : kAllDims) active_pes *= m.spatial[idx(d)];

  MappingMetrics metrics;
  metrics.levels.resize(static_cast<std::size_t>(num_levels));
  metrics.macs = layer_macs(layer);
  std::int64_t cycles = metrics.macs / active_pes;
  for (int l = 0; l < num_levels; ++l) {
    const MemoryLevel& level = arch.level(l);
    LevelMetrics& lm = metrics.levels[static_cast<std::size_t>(l)];
    for (Tensor t : kAllTensors) {
      if (!level.holds(t)) continue;
      const auto& e = counts.levels[static_cast<std::size_t>(l)][idx(t)];
      TensorTraffic& tt = lm.tensors[idx(t)];
      tt.element_reads = e.reads;
      tt.element_writes = e.writes;
      tt.word_reads = words_needed(e.reads, q.bits(t), level.word_bits);
      tt.word_writes = words_needed(e.writes, q.bits(t), level.word_bits);
    }
    const std::int64_t traffic = lm.word_traffic();
    lm.energy_pj = static_cast<double>(traffic) * level.energy_per_word_access_pj;
    metrics.memory_energy_pj += lm.energy_pj;

    const std::int64_t instances = l < arch.fanout.level_index ? active_pes : 1;
    const double per_instance = static_cast<double>(traffic) / static_cast<double>(instances);
    const auto level_cycles =
        static_cast<std::int64_t>(std::ceil(per_instance / level.bandwidth_words_per_cycle));
    cycles = std::max(cycles, level_cycles);
  }
  metrics.mac_energy_pj = static_cast<double>(metrics.macs) * arch.energy_per_mac_pj;
  metrics.total_energy_pj = metrics.memory_energy_pj + metrics.mac_energy_pj;
  metrics.cycles = cycles;
  metrics.edp = metrics.total_energy_pj * static_cast<double>(cycles);
  return metrics;
}

MappingMetrics evaluate(const Mapping& m, const LayerWorkload& layer, const LayerQuant& q,
                        const ArchitectureSpec& arch) {
  if (!is_well_formed(m, layer, arch))
    throw ContractViolation("mapping is not a well-formed factorization of layer '" + layer.name + "'");
  const auto violations = check_validity(m, layer, arch, q);
  if (!violations.empty())
    throw ContractViolation("mapping violates capacity: " + violations.front().describe(arch));
  return evaluate_unchecked(m, layer, q, arch);
}

}  // namespace qmap
