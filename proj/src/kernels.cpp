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

#include "qmap/kernels.hpp"

#include <algorithm>
#include <omp.h>

#include "qmap/costmodel.hpp"

namespace qmap::kernels {

std::vector<std::vector<std::int64_t>> ordered_factorizations(std::int64_t n, int parts,
                                                              std::int64_t last_cap) {
  std::vector<std::vector<std::int64_t>> out;
  std::vector<std::int64_t> current;
  auto recurse = [&](auto&& self, std::int64_t remaining, int left) -> void {
    if (left == 1) {
      if (remaining <= last_cap) {
        current.push_back(remaining);
        out.push_back(current);
        current.pop_back();
      }
      return;
    }
    for (std::int64_t f = 1; f <= remaining; ++f) {
      if (remaining % f) continue;
      current.push_back(f);
      self(self, remaining / f, left - 1);
      current.pop_back();
    }
  };
  recurse(recurse, n, parts);
  return out;
}

TilingSpace::TilingSpace(const LayerWorkload& layer, const ArchitectureSpec& arch) : arch_(&arch) {
  const int parts = arch.num_levels() + 1;
  const std::int64_t cap = std::max(arch.fanout.dims_x, arch.fanout.dims_y);
  for (Dim d : kAllDims) {
    factorizations_[idx(d)] = ordered_factorizations(layer.bound(d), parts, cap);
    raw_size_ *= factorizations_[idx(d)].size();
  }
}

bool TilingSpace::materialize(std::uint64_t i, Mapping& m) const {
  const auto num_levels = static_cast<std::size_t>(arch_->num_levels());
  m.levels.resize(num_levels);
  // Dim N is the most significant digit so raw order is lexicographic in
  // per-dim choice indices.
  for (std::size_t k = kNumDims; k-- > 0;) {
    const auto& options = factorizations_[k];
    const auto& parts = options[i % options.size()];
    i /= options.size();
    for (std::size_t l = 0; l < num_levels; ++l) m.levels[l].factors[k] = parts[l];
    m.spatial[k] = parts[num_levels];
  }
  for (auto& level : m.levels) {
    level.order = kAllDims;
    canonicalize_order(level);
  }
  return assign_spatial_axes(m.spatial, arch_->fanout, m.axis);
}

std::int64_t order_count(const Mapping& m) {
  std::int64_t count = 1;
  for (const auto& level : m.levels) {
    std::int64_t k = 0;
    for (Dim d : kAllDims) k += level.factors[idx(d)] > 1;
    for (std::int64_t f = 2; f <= k; ++f) count *= f;
  }
  return count;
}

bool next_order(Mapping& m) {
  for (auto& level : m.levels) {
    auto first_unit = std::find_if(level.order.begin(), level.order.end(),
                                   [&](Dim d) { return level.factors[idx(d)] == 1; });
    if (std::next_permutation(level.order.begin(), first_unit,
                              [](Dim a, Dim b) { return idx(a) < idx(b); }))
      return true;
    // Wrapped to the first (sorted) order; carry into the next level.
  }
  return false;
}

void Reduction::offer_valid(double edp, const Mapping& m) {
  ++valid;
  if (!best || better_candidate(edp, m, best_edp, *best)) {
    best = m;
    best_edp = edp;
  }
}

namespace {

double overflow_ratio(const std::vector<Violation>& v, const Violation** worst) {
  double ratio = 0.0;
  for (const auto& x : v) {
    const double r = static_cast<double>(x.required_words) / static_cast<double>(x.capacity_words);
    if (r > ratio) {
      ratio = r;
      *worst = &x;
    }
  }
  return ratio;
}

}  // namespace

void Reduction::offer_invalid(const std::vector<Violation>& v, std::uint64_t index) {
  const Violation* worst = nullptr;
  const double ratio = overflow_ratio(v, &worst);
  if (!worst) return;
  if (!tightest || ratio < tightest_ratio || (ratio == tightest_ratio && index < tightest_index)) {
    tightest = *worst;
    tightest_ratio = ratio;
    tightest_index = index;
  }
}

void Reduction::merge(const Reduction& other) {
  valid += other.valid;
  examined += other.examined;
  if (other.best && (!best || better_candidate(other.best_edp, *other.best, best_edp, *best))) {
    best = other.best;
    best_edp = other.best_edp;
  }
  if (other.tightest &&
      (!tightest || other.tightest_ratio < tightest_ratio ||
       (other.tightest_ratio == tightest_ratio && other.tightest_index < tightest_index))) {
    tightest = other.tightest;
    tightest_ratio = other.tightest_ratio;
    tightest_index = other.tightest_index;
  }
}

namespace {

// All loop orders of one tiling. Validity does not depend on loop order, so
// it is checked once per tiling.
void reduce_tiling(std::uint64_t index, Mapping& m, const LayerWorkload& layer,
                   const ArchitectureSpec& arch, const LayerQuant& q, Reduction& acc) {
  const auto violations = check_validity(m, layer, arch, q);
  const std::int64_t orders = order_count(m);
  acc.examined += orders;
  if (!violations.empty()) {
    acc.offer_invalid(violations, index);
    return;
  }
  do {
    acc.offer_valid(evaluate_unchecked(m, layer, q, arch).edp, m);
  } while (next_order(m));
}

}  // namespace

Reduction exhaustive_serial(const TilingSpace& space, const LayerWorkload& layer,
                            const ArchitectureSpec& arch, const LayerQuant& q) {
  Reduction acc;
  Mapping m;
  for (std::uint64_t i = 0; i < space.raw_size(); ++i) {
    if (!space.materialize(i, m)) continue;
    reduce_tiling(i, m, layer, arch, q, acc);
  }
  return acc;
}

Reduction exhaustive_omp(const TilingSpace& space, const LayerWorkload& layer,
                         const ArchitectureSpec& arch, const LayerQuant& q) {
  Reduction total;
  const auto n = static_cast<std::int64_t>(space.raw_size());
#pragma omp parallel
  {
    Reduction local;
    Mapping m;
#pragma omp for schedule(dynamic, 64) nowait
    for (std::int64_t i = 0; i < n; ++i) {
      if (!space.materialize(static_cast<std::uint64_t>(i), m)) continue;
      reduce_tiling(static_cast<std::uint64_t>(i), m, layer, arch, q, local);
    }
#pragma omp critical(qmap_exhaustive_merge)
    total.merge(local);
  }
  return total;
}

namespace {

void evaluate_one(const Mapping& m, const LayerWorkload& layer, const ArchitectureSpec& arch,
                  const LayerQuant& q, CandidateResult& r) {
  r.violations = check_validity(m, layer, arch, q);
  r.valid = r.violations.empty();
  r.edp = r.valid ? evaluate_unchecked(m, layer, q, arch).edp : 0.0;
}

}  // namespace

void evaluate_block_serial(std::span<const Mapping> candidates, const LayerWorkload& layer,
                           const ArchitectureSpec& arch, const LayerQuant& q,
                           std::span<CandidateResult> out) {
  for (std::size_t i = 0; i < candidates.size(); ++i) evaluate_one(candidates[i], layer, arch, q, out[i]);
}

void evaluate_block_omp(std::span<const Mapping> candidates, const LayerWorkload& layer,
                        const ArchitectureSpec& arch, const LayerQuant& q,
                        std::span<CandidateResult> out) {
  const auto n = static_cast<std::int64_t>(candidates.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    evaluate_one(candidates[k], layer, arch, q, out[k]);
  }
}

}  // namespace qmap::kernels
