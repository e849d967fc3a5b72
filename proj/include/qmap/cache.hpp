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
#include <deque>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "qmap/costmodel.hpp"
#include "qmap/mapspace.hpp"
#include "qmap/workload.hpp"

namespace qmap {

struct CacheKey {
  std::uint64_t digest = 0;
  bool operator==(const CacheKey&) const = default;
};

// Covers everything that can change a layer's best mapping: architecture
// hash, layer shape (not its name), all three bit-widths and the full mapper
// configuration including its seed.
CacheKey make_cache_key(std::uint64_t arch_hash, const LayerWorkload& layer, const LayerQuant& q,
                        const MapperConfig& cfg);

struct CacheEntry {
  std::string mapping;  // Mapping::encode()
  MappingMetrics metrics;
  std::int64_t created_unix = 0;
  std::string tool_version;

  // Value equality ignores creation metadata.
  bool same_result(const CacheEntry& other) const {
    return mapping == other.mapping && metrics == other.metrics;
  }
};

// Thread-safe memo of per-layer results with an optional append-only store.
//
// On-disk layout: <dir>/qmap-cache-v1.jsonl, one JSON record per line:
//   {"key":"<16 hex>","mapping":"...","metrics":{...},"created":<unix>,
//    "version":"...","check":"<16 hex>"}
// "check" is a digest of the other fields; a record that fails to parse or
// verify is skipped with a warning. The first record for a key wins.
class EvaluationCache {
 public:
  struct Stats {
    std::int64_t hits = 0;
    std::int64_t misses = 0;
    std::int64_t corrupt_records = 0;
    std::int64_t loaded_records = 0;
  };

  // `max_entries` == 0 means no cap; otherwise the oldest entries are
  // dropped from memory first.
  explicit EvaluationCache(std::optional<std::filesystem::path> dir = std::nullopt,
                           std::size_t max_entries = 0);

  std::optional<CacheEntry> get(const CacheKey& key) const;
  // Returns false when the key was already present (first writer wins).
  bool put(const CacheKey& key, const CacheEntry& entry);

  std::size_t size() const;
  Stats stats() const;
  bool persistent() const;

  static constexpr const char* kFileName = "qmap-cache-v1.jsonl";

 private:
  bool insert_locked(std::uint64_t digest, const CacheEntry& entry);
  void load(const std::filesystem::path& file);

  mutable std::shared_mutex mu_;
  std::unordered_map<std::uint64_t, CacheEntry> entries_;
  std::deque<std::uint64_t> insertion_order_;
  std::size_t max_entries_;
  std::ofstream log_;
  bool persistent_ = false;
  mutable std::atomic<std::int64_t> hits_{0};
  mutable std::atomic<std::int64_t> misses_{0};
  std::int64_t corrupt_ = 0;
  std::int64_t loaded_ = 0;
};

std::string serialize_cache_record(const CacheKey& key, const CacheEntry& entry);
// nullopt when the line is malformed or fails its check digest.
std::optional<std::pair<CacheKey, CacheEntry>> parse_cache_record(const std::string& line);

}  // namespace qmap
