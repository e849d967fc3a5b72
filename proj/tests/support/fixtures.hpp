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

#include <filesystem>
#include <initializer_list>
#include <string>

#include "qmap/archspec.hpp"
#include "qmap/util.hpp"
#include "qmap/workload.hpp"

namespace qmap::testing {

std::filesystem::path data_dir();
std::filesystem::path arch_path(const std::string& name);  // data/arch/<name>.arch
std::filesystem::path net_path(const std::string& name);   // data/net/<name>.net

LayerWorkload make_layer(LayerKind kind, std::int64_t n, std::int64_t m, std::int64_t c, std::int64_t p,
                         std::int64_t q, std::int64_t r, std::int64_t s, int stride = 1);

MemoryLevel make_level(const std::string& name, std::int64_t capacity, std::initializer_list<Tensor> held,
                       int word_bits = 16, double energy = 1.0);

// Random layer with every dim in [1, max_dim].
LayerWorkload random_layer(Rng& rng, std::int64_t max_dim);

// Random 2..max_levels hierarchy; the outermost level is unbounded and holds
// everything, inner levels hold a random non-empty tensor subset.
ArchitectureSpec random_arch(Rng& rng, int max_levels);

// A scratch directory removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace qmap::testing
