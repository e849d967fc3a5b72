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

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmap/archspec.hpp"
#include "qmap/costmodel.hpp"
#include "qmap/mapping.hpp"
#include "qmap/util.hpp"
#include "qmap/workload.hpp"

namespace qmap {

struct MapperConfig {
  enum class Mode { Exhaustive, RandomSearch };

  Mode mode = Mode::RandomSearch;
  std::int64_t valid_target = 2000;
  std::int64_t sample_budget = 200000;
  std::uint64_t seed = 0;
  // Exhaustive walks refuse spaces whose upper-bound size exceeds this.
  std::int64_t exhaustive_ceiling = 100'000'000;

  void validate() const;
  bool operator==(const MapperConfig&) const = default;
};

std::string_view mode_name(MapperConfig::Mode mode);

struct Violation {
  int level = 0;
  // nullopt when the overflowing capacity is a pool shared by all held tensors.
  std::optional<Tensor> tensor;
  std::int64_t required_words = 0;
  std::int64_t capacity_words = 0;

  bool operator==(const Violation&) const = default;
  std::string describe(const ArchitectureSpec& arch) const;
};

class SpaceTooLarge : public std::runtime_error {
 public:
  SpaceTooLarge(std::int64_t estimate, std::int64_t ceiling);
  std::int64_t estimate() const { return estimate_; }

 private:
  std::int64_t estimate_;
};

class NoValidMapping : public std::runtime_error {
 public:
  NoValidMapping(const std::string& what, std::optional<Violation> tightest)
      : std::runtime_error(what), tightest_(tightest) {}
  const std::optional<Violation>& tightest() const { return tightest_; }

 private:
  std::optional<Violation> tightest_;
};

// Capacity check with bit-packing: at every level, each held tensor's tile
// needs words_needed(footprint, bits, word_bits) words, summed over tensors
// when the level is a shared pool. Returns every violation.
std::vector<Violation> check_validity(const Mapping& m, const LayerWorkload& layer,
                                      const ArchitectureSpec& arch, const LayerQuant& q);

// Upper bound on the exhaustive space size (spatial fit ignored).
std::int64_t mapspace_size_bound(const LayerWorkload& layer, const ArchitectureSpec& arch);

// Exact size of the exhaustive space (spatial fit honoured).
std::int64_t mapspace_size(const LayerWorkload& layer, const ArchitectureSpec& arch);

// Visits every well-formed mapping exactly once in a fixed order. Validity
// is not checked. Throws SpaceTooLarge past `ceiling`.
void enumerate_mappings(const LayerWorkload& layer, const ArchitectureSpec& arch,
                        const std::function<void(const Mapping&)>& visit,
                        std::int64_t ceiling = 100'000'000);

// Precomputed ordered-factorization tables for uniform random sampling.
class MappingSampler {
 public:
  MappingSampler(const LayerWorkload& layer, const ArchitectureSpec& arch);
  Mapping sample(Rng& rng) const;

 private:
  const ArchitectureSpec* arch_;
  std::vector<std::vector<std::vector<std::int64_t>>> factorizations_;  // [dim][choice][part]
};

Mapping sample_mapping(const LayerWorkload& layer, const ArchitectureSpec& arch, Rng& rng);

struct SearchOutcome {
  std::int64_t valid_count = 0;
  std::int64_t examined = 0;
  std::optional<Mapping> best;
  std::optional<MappingMetrics> best_metrics;
  std::optional<Violation> tightest;  // from the nearest-to-valid candidate
};

enum class Exec { Serial, Parallel };

// Exhaustive: exact valid count plus the minimum-EDP mapping (ties go to the
// lexicographically smallest encoding). Random: draws until valid_target
// valid mappings are found or sample_budget candidates are spent.
SearchOutcome count_valid(const LayerWorkload& layer, const ArchitectureSpec& arch,
                          const LayerQuant& q, const MapperConfig& cfg, Exec exec = Exec::Parallel);

// True when `a` should be preferred over `b` as the best mapping.
bool better_candidate(double edp_a, const Mapping& a, double edp_b, const Mapping& b);

}  // namespace qmap
