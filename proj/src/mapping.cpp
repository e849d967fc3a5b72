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

#include "qmap/mapping.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace qmap {

namespace {

void append_factors(std::string& out, const DimArray& f) {
  out += '[';
  for (std::size_t i = 0; i < kNumDims; ++i) {
    if (i) out += ',';
    out += std::to_string(f[i]);
  }
  out += ']';
}

DimArray parse_factors(std::string_view& s) {
  if (s.empty() || s.front() != '[') throw std::invalid_argument("mapping: expected '['");
  s.remove_prefix(1);
  DimArray f{};
  for (std::size_t i = 0; i < kNumDims; ++i) {
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), f[i]);
    if (ec != std::errc()) throw std::invalid_argument("mapping: malformed factor list");
    s.remove_prefix(static_cast<std::size_t>(ptr - s.data()));
    const char expect = i + 1 < kNumDims ? ',' : ']';
    if (s.empty() || s.front() != expect) throw std::invalid_argument("mapping: malformed factor list");
    s.remove_prefix(1);
  }
  return f;
}

void expect_prefix(std::string_view& s, std::string_view prefix) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  if (s.substr(0, prefix.size()) != prefix)
    throw std::invalid_argument("mapping: expected '" + std::string(prefix) + "'");
  s.remove_prefix(prefix.size());
}

}  // namespace

std::string Mapping::encode() const {
  std::string out;
  for (std::size_t l = 0; l < levels.size(); ++l) {
    out += 'L';
    out += std::to_string(l);
    out += ": perm=";
    for (Dim d : levels[l].order) out += dim_letter(d);
    out += " t=";
    append_factors(out, levels[l].factors);
    out += " | ";
  }
  DimArray x = unit_dims(), y = unit_dims();
  for (Dim d : kAllDims) {
    if (axis[idx(d)] == SpatialAxis::X) x[idx(d)] = spatial[idx(d)];
    if (axis[idx(d)] == SpatialAxis::Y) y[idx(d)] = spatial[idx(d)];
  }
  out += "spatial: X=";
  append_factors(out, x);
  out += " Y=";
  append_factors(out, y);
  return out;
}

Mapping Mapping::decode(std::string_view s) {
  Mapping m;
  for (std::size_t l = 0;; ++l) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    if (s.substr(0, 8) == "spatial:") break;
    expect_prefix(s, "L" + std::to_string(l) + ": perm=");
    LevelTiling level;
    if (s.size() < kNumDims) throw std::invalid_argument("mapping: short permutation");
    std::array<bool, kNumDims> seen{};
    for (std::size_t i = 0; i < kNumDims; ++i) {
      const auto d = dim_from_letter(s[i]);
      if (!d || seen[idx(*d)]) throw std::invalid_argument("mapping: bad permutation");
      seen[idx(*d)] = true;
      level.order[i] = *d;
    }
    s.remove_prefix(kNumDims);
    expect_prefix(s, "t=");
    level.factors = parse_factors(s);
    expect_prefix(s, "|");
    m.levels.push_back(level);
  }
  expect_prefix(s, "spatial: X=");
  const DimArray x = parse_factors(s);
  expect_prefix(s, "Y=");
  const DimArray y = parse_factors(s);
  for (Dim d : kAllDims) {
    const auto i = idx(d);
    if (x[i] > 1 && y[i] > 1) throw std::invalid_argument("mapping: dim split on both axes");
    if (x[i] > 1) {
      m.spatial[i] = x[i];
      m.axis[i] = SpatialAxis::X;
    } else if (y[i] > 1) {
      m.spatial[i] = y[i];
      m.axis[i] = SpatialAxis::Y;
    }
  }
  return m;
}

void canonicalize_order(LevelTiling& level) {
  std::stable_partition(level.order.begin(), level.order.end(),
                        [&](Dim d) { return level.factors[idx(d)] > 1; });
  auto first_unit = std::find_if(level.order.begin(), level.order.end(),
                                 [&](Dim d) { return level.factors[idx(d)] == 1; });
  std::sort(first_unit, level.order.end(), [](Dim a, Dim b) { return idx(a) < idx(b); });
}

bool assign_spatial_axes(const DimArray& spatial, const SpatialFanout& fanout,
                         std::array<SpatialAxis, kNumDims>& axis) {
  std::int64_t px = 1, py = 1;
  for (Dim d : kAllDims) {
    const std::int64_t s = spatial[idx(d)];
    axis[idx(d)] = SpatialAxis::None;
    if (s == 1) continue;
    if (px * s <= fanout.dims_x) {
      px *= s;
      axis[idx(d)] = SpatialAxis::X;
    } else if (py * s <= fanout.dims_y) {
      py *= s;
      axis[idx(d)] = SpatialAxis::Y;
    } else {
      return false;
    }
  }
  return true;
}

bool is_well_formed(const Mapping& m, const LayerWorkload& layer, const ArchitectureSpec& arch) {
  if (static_cast<int>(m.levels.size()) != arch.num_levels()) return false;
  for (Dim d : kAllDims) {
    std::int64_t prod = m.spatial[idx(d)];
    for (const auto& level : m.levels) {
      if (level.factors[idx(d)] < 1) return false;
      prod *= level.factors[idx(d)];
    }
    if (m.spatial[idx(d)] < 1 || prod != layer.bound(d)) return false;
  }
  for (const auto& level : m.levels) {
    LevelTiling canon = level;
    canonicalize_order(canon);
    // Non-unit dims may be in any order; the unit tail must be canonical.
    std::array<bool, kNumDims> seen{};
    for (Dim d : level.order) {
      if (seen[idx(d)]) return false;
      seen[idx(d)] = true;
    }
    auto tail = [&](const LevelTiling& t) {
      std::vector<Dim> v;
      for (Dim d : t.order)
        if (t.factors[idx(d)] == 1) v.push_back(d);
      return v;
    };
    if (tail(canon) != tail(level)) return false;
    for (std::size_t i = 0; i + 1 < kNumDims; ++i) {
      if (level.factors[idx(level.order[i])] == 1 && level.factors[idx(level.order[i + 1])] > 1)
        return false;
    }
  }
  std::array<SpatialAxis, kNumDims> axis{};
  if (!assign_spatial_axes(m.spatial, arch.fanout, axis)) return false;
  return axis == m.axis;
}

std::int64_t cumulative_factor(const Mapping& m, const ArchitectureSpec& arch, int level, Dim d) {
  std::int64_t f = level >= arch.fanout.level_index ? m.spatial[idx(d)] : 1;
  for (int l = 0; l <= level; ++l) f *= m.levels[static_cast<std::size_t>(l)].factors[idx(d)];
  return f;
}

}  // namespace qmap
