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

#include "qmap/cache.hpp"

#include <charconv>
#include <nlohmann/json.hpp>

#include "qmap/log.hpp"
#include "qmap/util.hpp"

namespace qmap {

using nlohmann::json;

CacheKey make_cache_key(std::uint64_t arch_hash, const LayerWorkload& layer, const LayerQuant& q,
                        const MapperConfig& cfg) {
  Fnv1a h;
  h.str("qmap-cache-key-v1").u64(arch_hash);
  h.u64(static_cast<std::uint64_t>(layer.kind)).i64(layer.stride);
  for (Dim d : kAllDims) h.i64(layer.dim(d));
  h.i64(q.q_a).i64(q.q_w).i64(q.q_o);
  h.u64(static_cast<std::uint64_t>(cfg.mode)).i64(cfg.valid_target).i64(cfg.sample_budget);
  h.u64(cfg.seed).i64(cfg.exhaustive_ceiling);
  return {h.digest()};
}

namespace {

json metrics_to_json(const MappingMetrics& m) {
  json levels = json::array();
  for (const auto& lm : m.levels) {
    json tensors = json::array();
    for (const auto& t : lm.tensors)
      tensors.push_back({t.element_reads, t.element_writes, t.word_reads, t.word_writes});
    levels.push_back({{"tensors", tensors}, {"energy_pj", lm.energy_pj}});
  }
  return {{"levels", levels},
          {"macs", m.macs},
          {"memory_energy_pj", m.memory_energy_pj},
          {"mac_energy_pj", m.mac_energy_pj},
          {"total_energy_pj", m.total_energy_pj},
          {"cycles", m.cycles},
          {"edp", m.edp}};
}

MappingMetrics metrics_from_json(const json& j) {
  MappingMetrics m;
  for (const auto& lj : j.at("levels")) {
    LevelMetrics lm;
    const auto& tensors = lj.at("tensors");
    if (tensors.size() != kNumTensors) throw std::runtime_error("bad tensor count");
    for (std::size_t t = 0; t < kNumTensors; ++t) {
      const auto& a = tensors.at(t);
      lm.tensors[t] = {a.at(0).get<std::int64_t>(), a.at(1).get<std::int64_t>(),
                       a.at(2).get<std::int64_t>(), a.at(3).get<std::int64_t>()};
    }
    lm.energy_pj = lj.at("energy_pj").get<double>();
    m.levels.push_back(lm);
  }
  m.macs = j.at("macs").get<std::int64_t>();
  m.memory_energy_pj = j.at("memory_energy_pj").get<double>();
  m.mac_energy_pj = j.at("mac_energy_pj").get<double>();
  m.total_energy_pj = j.at("total_energy_pj").get<double>();
  m.cycles = j.at("cycles").get<std::int64_t>();
  m.edp = j.at("edp").get<double>();
  return m;
}

std::uint64_t record_check(const std::string& key_hex, const std::string& mapping,
                           const std::string& metrics_dump) {
  return Fnv1a().str(key_hex).str(mapping).str(metrics_dump).digest();
}

std::optional<std::uint64_t> parse_hex(const std::string& s) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v, 16);
  if (s.size() != 16 || ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

std::string serialize_cache_record(const CacheKey& key, const CacheEntry& entry) {
  const std::string key_hex = hex64(key.digest);
  const json metrics = metrics_to_json(entry.metrics);
  const std::string dump = metrics.dump();
  json rec = {{"key", key_hex},
              {"mapping", entry.mapping},
              {"metrics", metrics},
              {"created", entry.created_unix},
              {"version", entry.tool_version},
              {"check", hex64(record_check(key_hex, entry.mapping, dump))}};
  return rec.dump();
}

std::optional<std::pair<CacheKey, CacheEntry>> parse_cache_record(const std::string& line) {
  try {
    const json rec = json::parse(line);
    const auto key_hex = rec.at("key").get<std::string>();
    const auto digest = parse_hex(key_hex);
    if (!digest) return std::nullopt;
    CacheEntry entry;
    entry.mapping = rec.at("mapping").get<std::string>();
    const json& metrics = rec.at("metrics");
    const auto check = parse_hex(rec.at("check").get<std::string>());
    if (!check || *check != record_check(key_hex, entry.mapping, metrics.dump())) return std::nullopt;
    entry.metrics = metrics_from_json(metrics);
    entry.created_unix = rec.at("created").get<std::int64_t>();
    entry.tool_version = rec.at("version").get<std::string>();
    return std::make_pair(CacheKey{*digest}, std::move(entry));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

EvaluationCache::EvaluationCache(std::optional<std::filesystem::path> dir, std::size_t max_entries)
    : max_entries_(max_entries) {
  if (!dir) return;
  std::error_code ec;
  std::filesystem::create_directories(*dir, ec);
  if (ec) {
    log_warning("cache directory " + dir->string() + " unusable (" + ec.message() +
                "); using memory-only cache");
    return;
  }
  const auto file = *dir / kFileName;
  if (std::filesystem::exists(file)) load(file);
  log_.open(file, std::ios::app);
  if (!log_) {
    log_warning("cannot append to " + file.string() + "; using memory-only cache");
    return;
  }
  persistent_ = true;
}

void EvaluationCache::load(const std::filesystem::path& file) {
  std::ifstream in(file);
  std::string line;
  std::int64_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    auto rec = parse_cache_record(line);
    if (!rec) {
      ++corrupt_;
      log_warning(file.string() + ":" + std::to_string(line_no) + ": corrupt cache record skipped");
      continue;
    }
    if (insert_locked(rec->first.digest, rec->second)) ++loaded_;
  }
}

bool EvaluationCache::insert_locked(std::uint64_t digest, const CacheEntry& entry) {
  if (!entries_.emplace(digest, entry).second) return false;
  insertion_order_.push_back(digest);
  while (max_entries_ > 0 && entries_.size() > max_entries_) {
    entries_.erase(insertion_order_.front());
    insertion_order_.pop_front();
  }
  return true;
}

std::optional<CacheEntry> EvaluationCache::get(const CacheKey& key) const {
  std::shared_lock lock(mu_);
  const auto it = entries_.find(key.digest);
  if (it == entries_.end()) {
    misses_.fetch_add(1, std::memory_order_relaxed);
    return std::nullopt;
  }
  hits_.fetch_add(1, std::memory_order_relaxed);
  return it->second;
}

bool EvaluationCache::put(const CacheKey& key, const CacheEntry& entry) {
  std::unique_lock lock(mu_);
  if (!insert_locked(key.digest, entry)) return false;
  if (persistent_) {
    log_ << serialize_cache_record(key, entry) << '\n';
    log_.flush();
    if (!log_) {
      persistent_ = false;
      log_warning("cache write failed; continuing with memory-only cache");
    }
  }
  return true;
}

std::size_t EvaluationCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

EvaluationCache::Stats EvaluationCache::stats() const {
  std::shared_lock lock(mu_);
  return {hits_.load(), misses_.load(), corrupt_, loaded_};
}

bool EvaluationCache::persistent() const {
  std::shared_lock lock(mu_);
  return persistent_;
}

}  // namespace qmap
