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

#include "qmap/mapspace.hpp"

#include <algorithm>
#include <map>

#include "qmap/kernels.hpp"
#include "qmap/packing.hpp"

namespace qmap {

void MapperConfig::validate() const {
  if (valid_target < 1) throw std::invalid_argument("mapper valid_target must be >= 1");
  if (sample_budget < valid_target)
    throw std::invalid_argument("mapper sample_budget must be >= valid_target");
  if (exhaustive_ceiling < 1) throw std::invalid_argument("exhaustive ceiling must be >= 1");
}

std::string_view mode_name(MapperConfig::Mode mode) {
  return mode == MapperConfig::Mode::Exhaustive ? "exhaustive" : "random";
}

std::string Violation::describe(const ArchitectureSpec& arch) const {
  std::string who = tensor ? std::string(tensor_name(*tensor)) : std::string("shared pool");
  return "level '" + arch.level(level).name + "' " + who + " needs " +
         std::to_string(required_words) + " words, capacity " + std::to_string(capacity_words);
}

SpaceTooLarge::SpaceTooLarge(std::int64_t estimate, std::int64_t ceiling)
    : std::runtime_error("mapspace too large for exhaustive search: estimated " +
                         std::to_string(estimate) + " candidates, ceiling " +
                         std::to_string(ceiling)),
      estimate_(estimate) {}

std::vector<Violation> check_validity(const Mapping& m, const LayerWorkload& layer,
                                      const ArchitectureSpec& arch, const LayerQuant& q) {
  std::vector<Violation> out;
  for (int l = 0; l < arch.num_levels(); ++l) {
    const MemoryLevel& level = arch.level(l);
    if (level.unbounded) continue;
    std::int64_t pooled = 0;
    for (Tensor t : kAllTensors) {
      if (!level.holds(t)) continue;
      const std::int64_t words =
          words_needed(tile_footprint(m, layer, arch, l, t), q.bits(t), level.word_bits);
      if (level.shared_capacity) {
        pooled += words;
      } else if (words > level.partition_words[idx(t)]) {
        out.push_back({l, t, words, level.partition_words[idx(t)]});
      }
    }
    if (level.shared_capacity && pooled > level.capacity_words)
      out.push_back({l, std::nullopt, pooled, level.capacity_words});
  }
  return out;
}

std::int64_t mapspace_size_bound(const LayerWorkload& layer, const ArchitectureSpec& arch) {
  // Distribution of non-unit dim counts per level, accumulated dim by dim.
  const int num_levels = arch.num_levels();
  using State = std::array<std::int8_t, kMaxLevels>;
  std::map<State, long double> states{{State{}, 1.0L}};
  const std::int64_t cap = std::max(arch.fanout.dims_x, arch.fanout.dims_y);
  for (Dim d : kAllDims) {
    const auto options = kernels::ordered_factorizations(layer.bound(d), num_levels + 1, cap);
    std::map<State, long double> next;
    for (const auto& [state, count] : states) {
      for (const auto& parts : options) {
        State s = state;
        for (int l = 0; l < num_levels; ++l) s[static_cast<std::size_t>(l)] += parts[static_cast<std::size_t>(l)] > 1;
        next[s] += count;
      }
    }
    states = std::move(next);
  }
  long double total = 0;
  for (const auto& [state, count] : states) {
    long double orders = 1;
    for (int l = 0; l < num_levels; ++l)
      for (int f = 2; f <= state[static_cast<std::size_t>(l)]; ++f) orders *= f;
    total += orders * count;
  }
  return total > 9.0e18L ? INT64_MAX : static_cast<std::int64_t>(total);
}

std::int64_t mapspace_size(const LayerWorkload& layer, const ArchitectureSpec& arch) {
  kernels::TilingSpace space(layer, arch);
  Mapping m;
  std::int64_t total = 0;
  for (std::uint64_t i = 0; i < space.raw_size(); ++i)
    if (space.materialize(i, m)) total += kernels::order_count(m);
  return total;
}

void enumerate_mappings(const LayerWorkload& layer, const ArchitectureSpec& arch,
                        const std::function<void(const Mapping&)>& visit, std::int64_t ceiling) {
  const std::int64_t estimate = mapspace_size_bound(layer, arch);
  if (estimate > ceiling) throw SpaceTooLarge(estimate, ceiling);
  kernels::TilingSpace space(layer, arch);
  Mapping m;
  for (std::uint64_t i = 0; i < space.raw_size(); ++i) {
    if (!space.materialize(i, m)) continue;
    do {
      visit(m);
    } while (kernels::next_order(m));
  }
}

MappingSampler::MappingSampler(const LayerWorkload& layer, const ArchitectureSpec& arch)
    : arch_(&arch) {
  const int parts = arch.num_levels() + 1;
  const std::int64_t cap = std::max(arch.fanout.dims_x, arch.fanout.dims_y);
  for (Dim d : kAllDims)
    factorizations_.push_back(kernels::ordered_factorizations(layer.bound(d), parts, cap));
}

Mapping MappingSampler::sample(Rng& rng) const {
  const auto num_levels = static_cast<std::size_t>(arch_->num_levels());
  Mapping m;
  m.levels.resize(num_levels);
  // Rejection keeps the draw uniform over factorizations that fit the array.
  do {
    for (std::size_t k = 0; k < kNumDims; ++k) {
      const auto& options = factorizations_[k];
      const auto& parts = options[rng.below(options.size())];
      for (std::size_t l = 0; l < num_levels; ++l) m.levels[l].factors[k] = parts[l];
      m.spatial[k] = parts[num_levels];
    }
  } while (!assign_spatial_axes(m.spatial, arch_->fanout, m.axis));

  for (auto& level : m.levels) {
    level.order = kAllDims;
    canonicalize_order(level);
    const auto k = static_cast<std::size_t>(std::count_if(
        level.order.begin(), level.order.end(), [&](Dim d) { return level.factors[idx(d)] > 1; }));
    for (std::size_t i = k; i > 1; --i) std::swap(level.order[i - 1], level.order[rng.below(i)]);
  }
  return m;
}

Mapping sample_mapping(const LayerWorkload& layer, const ArchitectureSpec& arch, Rng& rng) {
  return MappingSampler(layer, arch).sample(rng);
}

bool better_candidate(double edp_a, const Mapping& a, double edp_b, const Mapping& b) {
  if (edp_a != edp_b) return edp_a < edp_b;
  return a.encode() < b.encode();
}

namespace {

SearchOutcome finish(const kernels::Reduction& r, const LayerWorkload& layer,
                     const ArchitectureSpec& arch, const LayerQuant& q) {
  SearchOutcome out;
  out.valid_count = r.valid;
  out.examined = r.examined;
  out.best = r.best;
  out.tightest = r.tightest;
  if (r.best) out.best_metrics = evaluate_unchecked(*r.best, layer, q, arch);
  return out;
}

constexpr std::size_t kRandomBlock = 256;

}  // namespace

SearchOutcome count_valid(const LayerWorkload& layer, const ArchitectureSpec& arch,
                          const LayerQuant& q, const MapperConfig& cfg, Exec exec) {
  cfg.validate();
  for (int l = 0; l < arch.num_levels(); ++l)
    for (Tensor t : kAllTensors)
      if (arch.level(l).holds(t)) (void)packing_factor(q.bits(t), arch.level(l).word_bits);

  if (cfg.mode == MapperConfig::Mode::Exhaustive) {
    const std::int64_t estimate = mapspace_size_bound(layer, arch);
    if (estimate > cfg.exhaustive_ceiling) throw SpaceTooLarge(estimate, cfg.exhaustive_ceiling);
    const kernels::TilingSpace space(layer, arch);
    const auto r = exec == Exec::Serial ? kernels::exhaustive_serial(space, layer, arch, q)
                                        : kernels::exhaustive_omp(space, layer, arch, q);
    return finish(r, layer, arch, q);
  }

  const MappingSampler sampler(layer, arch);
  Rng rng(cfg.seed);
  kernels::Reduction acc;
  std::vector<Mapping> block;
  std::vector<kernels::CandidateResult> results;
  std::uint64_t drawn = 0;
  while (acc.valid < cfg.valid_target && static_cast<std::int64_t>(drawn) < cfg.sample_budget) {
    const auto n = std::min<std::uint64_t>(
        kRandomBlock, static_cast<std::uint64_t>(cfg.sample_budget) - drawn);
    block.clear();
    for (std::uint64_t i = 0; i < n; ++i) block.push_back(sampler.sample(rng));
    results.assign(block.size(), {});
    if (exec == Exec::Serial)
      kernels::evaluate_block_serial(block, layer, arch, q, results);
    else
      kernels::evaluate_block_omp(block, layer, arch, q, results);
    // Consume in draw order so the stopping point is schedule-independent.
    for (std::size_t i = 0; i < block.size() && acc.valid < cfg.valid_target; ++i, ++drawn) {
      ++acc.examined;
      if (results[i].valid)
        acc.offer_valid(results[i].edp, block[i]);
      else
        acc.offer_invalid(results[i].violations, drawn);
    }
  }
  return finish(acc, layer, arch, q);
}

}  // namespace qmap
