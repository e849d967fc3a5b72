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
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qmap/network.hpp"
#include "qmap/oracle.hpp"
#include "qmap/util.hpp"
#include "qmap/workload.hpp"

namespace qmap {

struct SearchConfig {
  std::size_t population = 32;
  std::size_t offspring = 16;
  double p_mut = 0.10;
  double p_mut_acc = 0.05;
  int min_bits = kMinGeneBits;
  int max_bits = kMaxGeneBits;
  int generations = 20;
  std::optional<double> wall_clock_seconds;  // checked at generation boundaries
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const SearchConfig&) const = default;
};

struct Individual {
  Genome genome;
  double accuracy = 0.0;  // maximized
  double edp = 0.0;       // pJ * cycles, minimized; infinite when a layer has no valid mapping
  double energy_pj = 0.0;
  std::int64_t cycles = 0;
  std::int64_t model_size_bits = 0;
  int rank = 0;
  double crowding = 0.0;
};

// Accuracy no lower and EDP no higher, one of them strictly.
bool dominates(const Individual& a, const Individual& b);

// Fronts of indices into `pop`, best first; each front in ascending index order.
std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const Individual> pop);

// Distance of each member of `front` (same order). Per objective, members are
// sorted by (objective, other objective, genome); the two ends get infinity
// and interior members add the neighbour gap divided by the objective's
// range. Objectives with zero or non-finite range contribute nothing.
std::vector<double> crowding_distance(std::span<const Individual> pop, std::span<const std::size_t> front);

// Uniform settings 2..8 bits (8 downward when the population is smaller),
// then copies of the all-8 genome with one gene replaced by a smaller width,
// avoiding duplicates where possible.
std::vector<Genome> initial_population(std::size_t num_layers, const SearchConfig& cfg);

Genome uniform_crossover(const Genome& a, const Genome& b, Rng& rng);

struct MutationTrace {
  bool reset = false;    // a layer was set back to (8, 8)
  bool replace = false;  // a gene was redrawn
  std::size_t reset_layer = 0;
  std::size_t replaced_gene = 0;
};

// With probability p_mut_acc one random layer becomes (max, max); then, with
// probability p_mut, one random gene is redrawn uniformly from
// [min_bits, max_bits]. The two draws are independent.
Genome mutate(const Genome& g, Rng& rng, double p_mut, double p_mut_acc, MutationTrace* trace = nullptr,
              int min_bits = kMinGeneBits, int max_bits = kMaxGeneBits);

// Area dominated by `points` inside [0, acc] x [edp, edp_ref].
double hypervolume(std::span<const Individual> points, double edp_ref);

// Non-dominated subset, sorted by EDP then accuracy.
std::vector<Individual> pareto_filter(std::span<const Individual> pop);

// Objectives of one genome. Mapper failures give infinite EDP; oracle
// failures propagate as OracleError.
Individual evaluate_genome(const Genome& g, const NetworkSpec& net, const LayerEvaluator& evaluator,
                           AccuracyOracle& oracle, const std::string& request_id);

struct SearchResult {
  std::vector<Individual> initial_front;
  std::vector<std::vector<Individual>> snapshots;  // archive front after each generation
  std::vector<Individual> archive;                 // final non-dominated set
  std::vector<Individual> population;              // last parent population
  double edp_reference = 0.0;  // 1.1 x worst finite EDP in the initial population
  int generations_completed = 0;
  bool complete = true;
  std::int64_t evaluations = 0;
  std::int64_t failed_evaluations = 0;
};

struct SearchHooks {
  const std::atomic<bool>* stop = nullptr;  // checked between generations
  std::function<void(int generation, const std::vector<Individual>& front)> on_generation;
};

SearchResult run_search(const NetworkSpec& net, const LayerEvaluator& evaluator, const SearchConfig& cfg,
                        AccuracyOracle& oracle, const SearchHooks& hooks = {});

}  // namespace qmap
