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

// Mapper inner loops in two flavours: a plain serial reference and an
// OpenMP version. Both must return identical results for identical inputs;
// tests/unit/test_kernels.cpp holds them to that and bench/ times them.

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "qmap/archspec.hpp"
#include "qmap/mapping.hpp"
#include "qmap/mapspace.hpp"
#include "qmap/workload.hpp"

namespace qmap::kernels {

// The cartesian product of per-dim ordered factorizations into
// (levels + 1) parts, the last part being the spatial split.
class TilingSpace {
 public:
  TilingSpace(const LayerWorkload& layer, const ArchitectureSpec& arch);

  // Linear index range; not every index fits the PE array.
  std::uint64_t raw_size() const { return raw_size_; }

  // Fills `m` (factors, canonical orders, spatial axes) for raw index `i`.
  // Returns false when the spatial split does not fit.
  bool materialize(std::uint64_t i, Mapping& m) const;

  const std::vector<std::vector<std::int64_t>>& choices(Dim d) const {
    return factorizations_[idx(d)];
  }

 private:
  const ArchitectureSpec* arch_;
  std::array<std::vector<std::vector<std::int64_t>>, kNumDims> factorizations_;
  std::uint64_t raw_size_ = 1;
};

// All ordered factorizations of n into `parts` positive factors, with the
// last factor capped at `last_cap`.
std::vector<std::vector<std::int64_t>> ordered_factorizations(std::int64_t n, int parts,
                                                              std::int64_t last_cap);

// Number of loop orders (non-unit dims permuted, unit dims pinned).
std::int64_t order_count(const Mapping& m);

// Steps `m` to the next loop-order combination, level 0 fastest. Returns
// false after the last one (and leaves `m` back at the first).
bool next_order(Mapping& m);

// Best-so-far accumulator with an order-independent merge.
struct Reduction {
  std::int64_t valid = 0;
  std::int64_t examined = 0;
  std::optional<Mapping> best;
  double best_edp = 0.0;
  // Nearest-to-valid candidate: smallest worst-case overflow ratio, then
  // smallest candidate index.
  std::optional<Violation> tightest;
  double tightest_ratio = 0.0;
  std::uint64_t tightest_index = 0;

  void offer_valid(double edp, const Mapping& m);
  void offer_invalid(const std::vector<Violation>& v, std::uint64_t index);
  void merge(const Reduction& other);
};

Reduction exhaustive_serial(const TilingSpace& space, const LayerWorkload& layer,
                            const ArchitectureSpec& arch, const LayerQuant& q);
Reduction exhaustive_omp(const TilingSpace& space, const LayerWorkload& layer,
                         const ArchitectureSpec& arch, const LayerQuant& q);

struct CandidateResult {
  bool valid = false;
  double edp = 0.0;
  std::vector<Violation> violations;
};

void evaluate_block_serial(std::span<const Mapping> candidates, const LayerWorkload& layer,
                           const ArchitectureSpec& arch, const LayerQuant& q,
                           std::span<CandidateResult> out);
void evaluate_block_omp(std::span<const Mapping> candidates, const LayerWorkload& layer,
                        const ArchitectureSpec& arch, const LayerQuant& q,
                        std::span<CandidateResult> out);

}  // namespace qmap::kernels
