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

#include <atomic>
#include <cstdint>
#include <future>
#include <memory>
#include <mutex>
#include <unordered_map>
#include <utility>
#include <vector>

#include "qmap/archspec.hpp"
#include "qmap/cache.hpp"
#include "qmap/costmodel.hpp"
#include "qmap/mapspace.hpp"
#include "qmap/workload.hpp"

namespace qmap {

// Minimum-EDP mapping among those the mapper examines. Throws NoValidMapping
// (carrying the tightest violation) when none fits.
std::pair<Mapping, MappingMetrics> best_mapping(const LayerWorkload& layer, const LayerQuant& q,
                                                const ArchitectureSpec& arch, const MapperConfig& cfg,
                                                Exec exec = Exec::Parallel);

class LayerMappingError : public NoValidMapping {
 public:
  LayerMappingError(std::size_t layer_index, const std::string& layer_name, const NoValidMapping& e);
  std::size_t layer_index() const { return layer_index_; }

 private:
  std::size_t layer_index_;
};

// Per-layer evaluation through an optional cache. Concurrent requests for the
// same key share one mapper run.
class LayerEvaluator {
 public:
  LayerEvaluator(ArchitectureSpec arch, MapperConfig cfg,
                 std::shared_ptr<EvaluationCache> cache = nullptr, Exec exec = Exec::Parallel);

  CacheEntry evaluate(const LayerWorkload& layer, const LayerQuant& q) const;

  const ArchitectureSpec& arch() const { return arch_; }
  const MapperConfig& config() const { return cfg_; }
  std::uint64_t arch_hash() const { return arch_hash_; }
  const std::shared_ptr<EvaluationCache>& cache() const { return cache_; }
  std::int64_t mapper_invocations() const { return invocations_.load(); }

 private:
  CacheEntry run_mapper(const LayerWorkload& layer, const LayerQuant& q) const;

  ArchitectureSpec arch_;
  std::uint64_t arch_hash_;
  MapperConfig cfg_;
  std::shared_ptr<EvaluationCache> cache_;
  Exec exec_;
  mutable std::atomic<std::int64_t> invocations_{0};
  mutable std::mutex inflight_mu_;
  mutable std::unordered_map<std::uint64_t, std::shared_future<CacheEntry>> inflight_;
};

struct NetworkMetrics {
  std::vector<CacheEntry> layers;
  std::vector<double> level_energy_pj;  // innermost first, summed over layers
  double memory_energy_pj = 0.0;
  double mac_energy_pj = 0.0;
  double total_energy_pj = 0.0;
  std::int64_t cycles = 0;
  double edp = 0.0;  // total energy * total cycles, pJ * cycles
  std::int64_t macs = 0;
  std::int64_t word_traffic = 0;  // all levels, tensors, directions
};

// Layers are evaluated concurrently when `parallel` is set; totals are summed
// in layer order.
NetworkMetrics network_metrics(const NetworkSpec& net, const QuantConfig& q,
                               const LayerEvaluator& evaluator, bool parallel = true);

NetworkMetrics network_metrics(const NetworkSpec& net, const QuantConfig& q,
                               const ArchitectureSpec& arch, const MapperConfig& cfg);

}  // namespace qmap
