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

#include "qmap/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <set>

#include "qmap/log.hpp"

namespace qmap {

void SearchConfig::validate() const {
  if (population < 2) throw std::invalid_argument("population must be >= 2");
  if (offspring < 1) throw std::invalid_argument("offspring count must be >= 1");
  if (!(p_mut >= 0.0 && p_mut <= 1.0)) throw std::invalid_argument("p_mut must be in [0, 1]");
  if (!(p_mut_acc >= 0.0 && p_mut_acc <= 1.0)) throw std::invalid_argument("p_mut_acc must be in [0, 1]");
  if (min_bits < 1 || min_bits > max_bits) throw std::invalid_argument("bad bit range");
  if (generations < 0) throw std::invalid_argument("generations must be >= 0");
  if (wall_clock_seconds && !(*wall_clock_seconds > 0.0))
    throw std::invalid_argument("wall-clock budget must be positive");
}

bool dominates(const Individual& a, const Individual& b) {
  return a.accuracy >= b.accuracy && a.edp <= b.edp && (a.accuracy > b.accuracy || a.edp < b.edp);
}

std::vector<std::vector<std::size_t>> nondominated_sort(std::span<const Individual> pop) {
  const std::size_t n = pop.size();
  std::vector<std::vector<std::size_t>> dominated(n);
  std::vector<std::size_t> count(n, 0);
  std::vector<std::vector<std::size_t>> fronts;
  std::vector<std::size_t> current;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      if (dominates(pop[i], pop[j]))
        dominated[i].push_back(j);
      else if (dominates(pop[j], pop[i]))
        ++count[i];
    }
    if (count[i] == 0) current.push_back(i);
  }
  while (!current.empty()) {
    std::vector<std::size_t> next;
    for (std::size_t i : current)
      for (std::size_t j : dominated[i])
        if (--count[j] == 0) next.push_back(j);
    std::sort(next.begin(), next.end());
    fronts.push_back(std::move(current));
    current = std::move(next);
  }
  return fronts;
}

std::vector<double> crowding_distance(std::span<const Individual> pop, std::span<const std::size_t> front) {
  const std::size_t n = front.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> dist(n, 0.0);
  if (n <= 2) {
    std::fill(dist.begin(), dist.end(), inf);
    return dist;
  }
  std::vector<std::size_t> order(n);
  for (int obj = 0; obj < 2; ++obj) {
    auto value = [&](std::size_t k) { return obj == 0 ? pop[front[k]].accuracy : pop[front[k]].edp; };
    auto other = [&](std::size_t k) { return obj == 0 ? pop[front[k]].edp : pop[front[k]].accuracy; };
    for (std::size_t k = 0; k < n; ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (value(a) != value(b)) return value(a) < value(b);
      if (other(a) != other(b)) return other(a) < other(b);
      return pop[front[a]].genome < pop[front[b]].genome;
    });
    dist[order.front()] = inf;
    dist[order.back()] = inf;
    const double range = value(order.back()) - value(order.front());
    if (!(range > 0.0) || !std::isfinite(range)) continue;
    for (std::size_t k = 1; k + 1 < n; ++k)
      dist[order[k]] += (value(order[k + 1]) - value(order[k - 1])) / range;
  }
  return dist;
}

std::vector<Genome> initial_population(std::size_t num_layers, const SearchConfig& cfg) {
  cfg.validate();
  std::vector<Genome> out;
  const auto settings = static_cast<std::size_t>(cfg.max_bits - cfg.min_bits + 1);
  if (cfg.population >= settings) {
    for (int b = cfg.min_bits; b <= cfg.max_bits; ++b) out.push_back(Genome::uniform(num_layers, b));
  } else {
    for (std::size_t k = 0; k < cfg.population; ++k)
      out.push_back(Genome::uniform(num_layers, cfg.max_bits - static_cast<int>(k)));
  }
  std::set<Genome> seen(out.begin(), out.end());
  const Genome base = Genome::uniform(num_layers, cfg.max_bits);
  for (std::size_t k = out.size(); k < cfg.population; ++k) {
    Rng rng(derive_seed(cfg.seed, 0, k));
    Genome g = base;
    // Small genomes may run out of distinct single-gene variants.
    for (int attempt = 0; attempt < 64; ++attempt) {
      g = base;
      g.genes[rng.below(g.size())] = rng.uniform_int(cfg.min_bits, cfg.max_bits - 1);
      if (!seen.count(g)) break;
    }
    seen.insert(g);
    out.push_back(std::move(g));
  }
  return out;
}

Genome uniform_crossover(const Genome& a, const Genome& b, Rng& rng) {
  if (a.size() != b.size())
    throw GenomeError("crossover parents differ in length: " + std::to_string(a.size()) + " vs " +
                      std::to_string(b.size()));
  Genome child = a;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (rng.bernoulli(0.5)) child.genes[i] = b.genes[i];
  return child;
}

Genome mutate(const Genome& g, Rng& rng, double p_mut, double p_mut_acc, MutationTrace* trace, int min_bits,
              int max_bits) {
  Genome out = g;
  MutationTrace t;
  if (!g.genes.empty()) {
    if (rng.bernoulli(p_mut_acc)) {
      t.reset = true;
      t.reset_layer = rng.below(g.layers());
      out.genes[2 * t.reset_layer] = max_bits;
      out.genes[2 * t.reset_layer + 1] = max_bits;
    }
    if (rng.bernoulli(p_mut)) {
      t.replace = true;
      t.replaced_gene = rng.below(g.size());
      out.genes[t.replaced_gene] = rng.uniform_int(min_bits, max_bits);
    }
  }
  if (trace) *trace = t;
  return out;
}

double hypervolume(std::span<const Individual> points, double edp_ref) {
  std::vector<Individual> pts;
  for (const auto& p : points)
    if (p.accuracy > 0.0 && p.edp < edp_ref) pts.push_back(p);
  const auto front = pareto_filter(pts);
  double area = 0.0;
  for (std::size_t i = 0; i < front.size(); ++i) {
    const double right = i + 1 < front.size() ? front[i + 1].edp : edp_ref;
    area += (right - front[i].edp) * front[i].accuracy;
  }
  return area;
}

std::vector<Individual> pareto_filter(std::span<const Individual> pop) {
  std::vector<Individual> out;
  for (std::size_t i = 0; i < pop.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pop.size() && !dominated; ++j) dominated = j != i && dominates(pop[j], pop[i]);
    if (!dominated) out.push_back(pop[i]);
  }
  std::sort(out.begin(), out.end(), [](const Individual& a, const Individual& b) {
    if (a.edp != b.edp) return a.edp < b.edp;
    if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
    return a.genome < b.genome;
  });
  // Identical objective pairs from different genomes are all kept.
  return out;
}

Individual evaluate_genome(const Genome& g, const NetworkSpec& net, const LayerEvaluator& evaluator,
                           AccuracyOracle& oracle, const std::string& request_id) {
  const QuantConfig q = decode_genome(g, net);
  Individual ind;
  ind.genome = g;
  ind.model_size_bits = model_size_bits(net, q);
  try {
    const NetworkMetrics nm = network_metrics(net, q, evaluator);
    ind.edp = nm.edp;
    ind.energy_pj = nm.total_energy_pj;
    ind.cycles = nm.cycles;
  } catch (const LayerMappingError& e) {
    log_warning("genome " + format_genome(g) + ": " + e.what() + "; EDP set to infinity");
    ind.edp = std::numeric_limits<double>::infinity();
    ind.energy_pj = std::numeric_limits<double>::infinity();
  }
  ind.accuracy = oracle.accuracy(g, request_id);
  return ind;
}

namespace {

void assign_rank_and_crowding(std::vector<Individual>& pop) {
  const auto fronts = nondominated_sort(pop);
  for (std::size_t r = 0; r < fronts.size(); ++r) {
    const auto dist = crowding_distance(pop, fronts[r]);
    for (std::size_t k = 0; k < fronts[r].size(); ++k) {
      pop[fronts[r][k]].rank = static_cast<int>(r);
      pop[fronts[r][k]].crowding = dist[k];
    }
  }
}

std::size_t tournament(const std::vector<Individual>& pop, Rng& rng) {
  const std::size_t a = rng.below(pop.size());
  const std::size_t b = rng.below(pop.size());
  auto better = [&](std::size_t i, std::size_t j) {
    if (pop[i].rank != pop[j].rank) return pop[i].rank < pop[j].rank;
    if (pop[i].crowding != pop[j].crowding) return pop[i].crowding > pop[j].crowding;
    return i < j;
  };
  return better(a, b) ? a : b;
}

// P ∪ Q truncated to `size` by front, then by crowding within the last front.
std::vector<Individual> select_survivors(std::vector<Individual> combined, std::size_t size) {
  std::vector<Individual> unique;
  std::set<Genome> seen;
  for (auto& ind : combined)
    if (seen.insert(ind.genome).second) unique.push_back(std::move(ind));

  std::vector<Individual> next;
  for (const auto& front : nondominated_sort(unique)) {
    if (next.size() + front.size() <= size) {
      for (std::size_t i : front) next.push_back(unique[i]);
      if (next.size() == size) break;
      continue;
    }
    const auto dist = crowding_distance(unique, front);
    std::vector<std::size_t> order(front.size());
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (dist[a] != dist[b]) return dist[a] > dist[b];
      return unique[front[a]].genome < unique[front[b]].genome;
    });
    for (std::size_t k = 0; next.size() < size; ++k) next.push_back(unique[front[order[k]]]);
    break;
  }
  assign_rank_and_crowding(next);
  return next;
}

struct Evaluated {
  std::optional<Individual> ind;
  std::string error;
  std::exception_ptr fatal;
};

class Generation {
 public:
  Generation(const NetworkSpec& net, const LayerEvaluator& evaluator, AccuracyOracle& oracle)
      : net_(net), evaluator_(evaluator), oracle_(oracle) {}

  // Evaluates genomes not seen before (concurrently) and returns the
  // successful individuals in input order. Results are memoized by genome.
  std::vector<Individual> evaluate(const std::vector<Genome>& genomes, int gen, SearchResult& result) {
    std::vector<std::size_t> todo;
    std::set<Genome> queued;
    for (std::size_t k = 0; k < genomes.size(); ++k)
      if (!memo_.count(genomes[k]) && queued.insert(genomes[k]).second) todo.push_back(k);

    std::vector<Evaluated> out(todo.size());
    const auto n = static_cast<std::int64_t>(todo.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (std::int64_t i = 0; i < n; ++i) {
      const auto k = todo[static_cast<std::size_t>(i)];
      const std::string id = "g" + std::to_string(gen) + "-i" + std::to_string(k);
      try {
        out[static_cast<std::size_t>(i)].ind = evaluate_genome(genomes[k], net_, evaluator_, oracle_, id);
      } catch (const OracleError& e) {
        out[static_cast<std::size_t>(i)].error = e.what();
      } catch (...) {
        out[static_cast<std::size_t>(i)].fatal = std::current_exception();
      }
    }
    for (const auto& o : out)
      if (o.fatal) std::rethrow_exception(o.fatal);
    for (std::size_t i = 0; i < todo.size(); ++i) {
      const Genome& g = genomes[todo[i]];
      ++result.evaluations;
      if (!out[i].ind) {
        ++result.failed_evaluations;
        log_warning("genome " + format_genome(g) + " excluded: " + out[i].error);
      }
      memo_.emplace(g, out[i].ind);
      if (out[i].ind) archive_.emplace(g, *out[i].ind);
    }

    std::vector<Individual> ok;
    for (const auto& g : genomes)
      if (const auto& ind = memo_.at(g)) ok.push_back(*ind);
    return ok;
  }

  std::vector<Individual> archive_front() const {
    std::vector<Individual> all;
    for (const auto& [g, ind] : archive_) all.push_back(ind);
    return pareto_filter(all);
  }

 private:
  const NetworkSpec& net_;
  const LayerEvaluator& evaluator_;
  AccuracyOracle& oracle_;
  std::map<Genome, std::optional<Individual>> memo_;
  std::map<Genome, Individual> archive_;
};

}  // namespace

SearchResult run_search(const NetworkSpec& net, const LayerEvaluator& evaluator, const SearchConfig& cfg,
                        AccuracyOracle& oracle, const SearchHooks& hooks) {
  cfg.validate();
  const auto started = std::chrono::steady_clock::now();
  SearchResult result;
  Generation engine(net, evaluator, oracle);

  std::vector<Individual> pop = engine.evaluate(initial_population(net.layers.size(), cfg), 0, result);
  if (pop.size() < 2) throw std::runtime_error("fewer than two initial individuals could be evaluated");
  double worst = 0.0;
  for (const auto& ind : pop)
    if (std::isfinite(ind.edp)) worst = std::max(worst, ind.edp);
  result.edp_reference = worst > 0.0 ? 1.1 * worst : 1.0;
  result.initial_front = pareto_filter(pop);
  assign_rank_and_crowding(pop);

  for (int gen = 1; gen <= cfg.generations; ++gen) {
    if (hooks.stop && hooks.stop->load()) {
      result.complete = false;
      break;
    }
    std::vector<Genome> children;
    for (std::size_t k = 0; k < cfg.offspring; ++k) {
      Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(gen), k));
      const Genome& a = pop[tournament(pop, rng)].genome;
      const Genome& b = pop[tournament(pop, rng)].genome;
      children.push_back(mutate(uniform_crossover(a, b, rng), rng, cfg.p_mut, cfg.p_mut_acc, nullptr,
                                cfg.min_bits, cfg.max_bits));
    }
    std::vector<Individual> combined = pop;
    for (auto& child : engine.evaluate(children, gen, result)) combined.push_back(std::move(child));
    pop = select_survivors(std::move(combined), cfg.population);

    result.snapshots.push_back(engine.archive_front());
    result.generations_completed = gen;
    if (hooks.on_generation) hooks.on_generation(gen, result.snapshots.back());
    if (cfg.wall_clock_seconds) {
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - started;
      if (elapsed.count() >= *cfg.wall_clock_seconds) {
        result.complete = gen == cfg.generations;
        break;
      }
    }
  }
  result.archive = engine.archive_front();
  result.population = std::move(pop);
  return result;
}

}  // namespace qmap
