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

#include "qmap/network.hpp"

#include <chrono>
#include <exception>

#include "qmap/util.hpp"

namespace qmap {

std::pair<Mapping, MappingMetrics> best_mapping(const LayerWorkload& layer, const LayerQuant& q,
                                                const ArchitectureSpec& arch, const MapperConfig& cfg,
                                                Exec exec) {
  SearchOutcome out = count_valid(layer, arch, q, cfg, exec);
  if (!out.best) {
    std::string msg = "no valid mapping for layer '" + layer.name + "' after examining " +
                      std::to_string(out.examined) + " candidates";
    if (out.tightest) msg += "; tightest: " + out.tightest->describe(arch);
    throw NoValidMapping(msg, out.tightest);
  }
  return {std::move(*out.best), std::move(*out.best_metrics)};
}

LayerMappingError::LayerMappingError(std::size_t layer_index, const std::string& layer_name,
                                     const NoValidMapping& e)
    : NoValidMapping("layer " + std::to_string(layer_index) + " (" + layer_name + "): " + e.what(),
                     e.tightest()),
      layer_index_(layer_index) {}

LayerEvaluator::LayerEvaluator(ArchitectureSpec arch, MapperConfig cfg,
                               std::shared_ptr<EvaluationCache> cache, Exec exec)
    : arch_(std::move(arch)),
      arch_hash_(canonical_hash(arch_)),
      cfg_(cfg),
      cache_(std::move(cache)),
      exec_(exec) {
  cfg_.validate();
}

CacheEntry LayerEvaluator::run_mapper(const LayerWorkload& layer, const LayerQuant& q) const {
  invocations_.fetch_add(1);
  auto [mapping, metrics] = best_mapping(layer, q, arch_, cfg_, exec_);
  CacheEntry e;
  e.mapping = mapping.encode();
  e.metrics = std::move(metrics);
  e.created_unix = std::chrono::duration_cast<std::chrono::seconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                       .count();
  e.tool_version = kToolVersion;
  return e;
}

CacheEntry LayerEvaluator::evaluate(const LayerWorkload& layer, const LayerQuant& q) const {
  if (!cache_) return run_mapper(layer, q);

  const CacheKey key = make_cache_key(arch_hash_, layer, q, cfg_);
  if (auto hit = cache_->get(key)) return *hit;

  std::promise<CacheEntry> promise;
  {
    std::unique_lock lock(inflight_mu_);
    // Re-check under the lock: a finished run publishes to the cache before
    // leaving the in-flight table.
    if (auto hit = cache_->get(key)) return *hit;
    auto it = inflight_.find(key.digest);
    if (it != inflight_.end()) {
      auto pending = it->second;
      lock.unlock();
      return pending.get();
    }
    inflight_.emplace(key.digest, promise.get_future().share());
  }

  try {
    CacheEntry e = run_mapper(layer, q);
    cache_->put(key, e);
    promise.set_value(e);
    std::lock_guard lock(inflight_mu_);
    inflight_.erase(key.digest);
    return e;
  } catch (...) {
    promise.set_exception(std::current_exception());
    std::lock_guard lock(inflight_mu_);
    inflight_.erase(key.digest);
    throw;
  }
}

NetworkMetrics network_metrics(const NetworkSpec& net, const QuantConfig& q,
                               const LayerEvaluator& evaluator, bool parallel) {
  const std::size_t n = net.layers.size();
  if (q.layers.size() != n)
    throw std::invalid_argument("quantization has " + std::to_string(q.layers.size()) +
                                " layers, network '" + net.name + "' has " + std::to_string(n));

  NetworkMetrics out;
  out.layers.resize(n);
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1) if (parallel)
  for (std::int64_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out.layers[k] = evaluator.evaluate(net.layers[k], q.layers[k]);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (!errors[k]) continue;
    try {
      std::rethrow_exception(errors[k]);
    } catch (const NoValidMapping& e) {
      throw LayerMappingError(k, net.layers[k].name, e);
    }
  }

  out.level_energy_pj.assign(static_cast<std::size_t>(evaluator.arch().num_levels()), 0.0);
  for (const auto& layer : out.layers) {
    const MappingMetrics& m = layer.metrics;
    for (std::size_t l = 0; l < m.levels.size(); ++l) {
      out.level_energy_pj[l] += m.levels[l].energy_pj;
      out.word_traffic += m.levels[l].word_traffic();
    }
    out.memory_energy_pj += m.memory_energy_pj;
    out.mac_energy_pj += m.mac_energy_pj;
    out.total_energy_pj += m.total_energy_pj;
    out.cycles += m.cycles;
    out.macs += m.macs;
  }
  out.edp = out.total_energy_pj * static_cast<double>(out.cycles);
  return out;
}

NetworkMetrics network_metrics(const NetworkSpec& net, const QuantConfig& q,
                               const ArchitectureSpec& arch, const MapperConfig& cfg) {
  return network_metrics(net, q, LayerEvaluator(arch, cfg));
}

}  // namespace qmap
