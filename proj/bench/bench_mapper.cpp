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

// Serial reference kernels against their OpenMP counterparts.
//
//   ./bench_mapper --benchmark_counters_tabular=true
//
// Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <string>
#include <vector>

#include "qmap/archspec.hpp"
#include "qmap/kernels.hpp"
#include "qmap/mapspace.hpp"
#include "qmap/workload.hpp"

namespace {

using namespace qmap;

const std::string kData = QMAP_DATA_DIR;

struct Fixture {
  ArchitectureSpec arch;
  LayerWorkload layer;
};

const Fixture& fixture(int which) {
  static const std::vector<Fixture> all = [] {
    const auto dw = load_network(kData + "/net/toy_dw.net").layers.at(0);
    return std::vector<Fixture>{{load_arch(kData + "/arch/eyeriss.arch"), dw},
                                {load_arch(kData + "/arch/simba.arch"), dw}};
  }();
  return all.at(static_cast<std::size_t>(which));
}

void exhaustive(benchmark::State& state, bool parallel) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)));
  const kernels::TilingSpace space(f.layer, f.arch);
  const auto q = LayerQuant::uniform(8);
  std::int64_t examined = 0;
  for (auto _ : state) {
    const auto r = parallel ? kernels::exhaustive_omp(space, f.layer, f.arch, q)
                            : kernels::exhaustive_serial(space, f.layer, f.arch, q);
    benchmark::DoNotOptimize(r.best_edp);
    examined += r.examined;
  }
  state.counters["mappings/s"] = benchmark::Counter(static_cast<double>(examined), benchmark::Counter::kIsRate);
  state.counters["threads"] = parallel ? omp_get_max_threads() : 1;
  state.SetLabel(f.arch.name);
}

void random_block(benchmark::State& state, bool parallel) {
  const Fixture& f = fixture(static_cast<int>(state.range(0)));
  const MappingSampler sampler(f.layer, f.arch);
  Rng rng(1);
  std::vector<Mapping> block;
  for (int i = 0; i < 4096; ++i) block.push_back(sampler.sample(rng));
  std::vector<kernels::CandidateResult> out(block.size());
  const auto q = LayerQuant::uniform(4);
  for (auto _ : state) {
    if (parallel)
      kernels::evaluate_block_omp(block, f.layer, f.arch, q, out);
    else
      kernels::evaluate_block_serial(block, f.layer, f.arch, q, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.counters["mappings/s"] = benchmark::Counter(static_cast<double>(state.iterations() * block.size()),
                                                    benchmark::Counter::kIsRate);
  state.counters["threads"] = parallel ? omp_get_max_threads() : 1;
  state.SetLabel(f.arch.name);
}

}  // namespace

BENCHMARK_CAPTURE(exhaustive, serial, false)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(exhaustive, omp, true)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(random_block, serial, false)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK_CAPTURE(random_block, omp, true)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
