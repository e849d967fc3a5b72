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
#include <string>
#include <string_view>
#include <vector>

#include "qmap/archspec.hpp"
#include "qmap/types.hpp"
#include "qmap/workload.hpp"

namespace qmap {

enum class SpatialAxis : std::uint8_t { None, X, Y };

// Temporal loops owned by one storage level.
struct LevelTiling {
  DimArray factors = unit_dims();
  // Loop order, innermost first. Dims with factor 1 sit after the
  // non-unit dims in canonical NMCPQRS order.
  std::array<Dim, kNumDims> order = kAllDims;

  bool operator==(const LevelTiling&) const = default;
};

struct Mapping {
  std::vector<LevelTiling> levels;  // innermost first
  DimArray spatial = unit_dims();   // split across the PE array
  std::array<SpatialAxis, kNumDims> axis{};

  // "L0: perm=... t=[...] | L1: ... | spatial: X=[...] Y=[...]"
  std::string encode() const;
  static Mapping decode(std::string_view text);

  bool operator==(const Mapping&) const = default;
};

// Pins unit-factor dims into canonical positions, keeping the relative order
// of the non-unit dims.
void canonicalize_order(LevelTiling& level);

// Greedy placement in NMCPQRS order: X while the product fits dims_x, else Y.
// Returns false when some factor fits neither axis.
bool assign_spatial_axes(const DimArray& spatial, const SpatialFanout& fanout,
                         std::array<SpatialAxis, kNumDims>& axis);

// Every dim satisfies prod_l t[l][d] * s[d] == bound(d), orders are
// canonical permutations, and the spatial split fits the array.
bool is_well_formed(const Mapping& m, const LayerWorkload& layer, const ArchitectureSpec& arch);

// The cumulative tile extent of `d` held at level l (spatial factors
// included from the fanout level upward).
std::int64_t cumulative_factor(const Mapping& m, const ArchitectureSpec& arch, int level, Dim d);

}  // namespace qmap
