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

#include "fixtures.hpp"

#include <atomic>
#include <unistd.h>

namespace qmap::testing {

std::filesystem::path data_dir() { return QMAP_DATA_DIR; }
std::filesystem::path arch_path(const std::string& name) { return data_dir() / "arch" / (name + ".arch"); }
std::filesystem::path net_path(const std::string& name) { return data_dir() / "net" / (name + ".net"); }

LayerWorkload make_layer(LayerKind kind, std::int64_t n, std::int64_t m, std::int64_t c, std::int64_t p,
                         std::int64_t q, std::int64_t r, std::int64_t s, int stride) {
  LayerWorkload l;
  l.name = "layer";
  l.kind = kind;
  l.dims = {n, m, c, p, q, r, s};
  l.stride = stride;
  validate_layer(l);
  return l;
}

MemoryLevel make_level(const std::string& name, std::int64_t capacity, std::initializer_list<Tensor> held,
                       int word_bits, double energy) {
  MemoryLevel lv;
  lv.name = name;
  lv.unbounded = capacity < 0;
  lv.capacity_words = capacity < 0 ? 0 : capacity;
  lv.word_bits = word_bits;
  lv.energy_per_word_access_pj = energy;
  for (Tensor t : held) lv.tensors_held[idx(t)] = true;
  return lv;
}

LayerWorkload random_layer(Rng& rng, std::int64_t max_dim) {
  auto dim = [&] { return static_cast<std::int64_t>(rng.uniform_int(1, static_cast<int>(max_dim))); };
  const int kind = rng.uniform_int(0, 2);
  LayerWorkload l;
  l.name = "rnd";
  l.stride = rng.uniform_int(1, 2);
  if (kind == 0) {
    l.kind = LayerKind::Standard;
    l.dims = {dim(), dim(), dim(), dim(), dim(), dim(), dim()};
  } else if (kind == 1) {
    l.kind = LayerKind::Depthwise;
    const auto c = dim();
    l.dims = {dim(), c, c, dim(), dim(), dim(), dim()};
  } else {
    l.kind = LayerKind::FullyConnected;
    l.stride = 1;
    l.dims = {dim(), dim(), dim(), 1, 1, 1, 1};
  }
  validate_layer(l);
  return l;
}

ArchitectureSpec random_arch(Rng& rng, int max_levels) {
  ArchitectureSpec a;
  a.name = "random";
  const int levels = rng.uniform_int(2, max_levels);
  for (int l = 0; l < levels; ++l) {
    MemoryLevel lv;
    lv.name = "L" + std::to_string(l);
    lv.energy_per_word_access_pj = 1.0 + l;
    if (l == levels - 1) {
      lv.unbounded = true;
      lv.tensors_held = {true, true, true};
    } else {
      lv.capacity_words = 1 << 20;
      do {
        for (auto& h : lv.tensors_held) h = rng.bernoulli(0.6);
      } while (!lv.tensors_held[0] && !lv.tensors_held[1] && !lv.tensors_held[2]);
    }
    a.levels.push_back(lv);
  }
  a.fanout.level_index = rng.uniform_int(0, levels - 1);
  a.fanout.dims_x = rng.uniform_int(1, 4);
  a.fanout.dims_y = rng.uniform_int(1, 4);
  a.energy_per_mac_pj = 0.5;
  return a;
}

TempDir::TempDir() {
  static std::atomic<int> counter{0};
  path_ = std::filesystem::temp_directory_path() /
          ("qmap-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
  std::filesystem::remove_all(path_);
  std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  std::filesystem::remove_all(path_, ec);
}

}  // namespace qmap::testing
