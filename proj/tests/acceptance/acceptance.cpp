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

// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "brute.hpp"
#include "fixtures.hpp"
#include "loopnest.hpp"
#include "qmap/commands.hpp"
#include "qmap/costmodel.hpp"
#include "qmap/log.hpp"
#include "qmap/mapspace.hpp"
#include "qmap/network.hpp"
#include "qmap/search.hpp"

using namespace qmap;
using namespace qmap::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, sep);) out.push_back(item);
  return out;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "qmap");
  std::ostringstream o, e;
  const int rc = run_cli(args, o, e);
  if (out) *out = o.str();
  if (rc != 0) std::cerr << e.str();
  return rc;
}

// 1. Analytical access counts equal the loop-nest interpreter.
Outcome interpreter_equivalence() {
  Rng rng(20260501);
  int pairs = 0, equal = 0;
  while (pairs < 300) {
    const auto arch = random_arch(rng, 3);
    const auto layer = random_layer(rng, 4);
    const Mapping m = sample_mapping(layer, arch, rng);
    ++pairs;
    equal += access_counts(m, layer, arch) == interpret_access_counts(m, layer, arch);
  }
  return {equal == pairs, std::to_string(equal) + "/" + std::to_string(pairs) + " pairs identical (dims <= 4, L <= 3)"};
}

// 2. Valid-mapping counts rise and min EDP falls across the bit settings.
Outcome table_trend() {
  const auto layer = load_network(net_path("toy_dw")).layers.at(0);
  MapperConfig cfg;
  cfg.mode = MapperConfig::Mode::Exhaustive;
  bool ok = true;
  std::string detail;
  for (const char* name : {"eyeriss", "simba"}) {
    const auto rows = run_enumerate(load_arch(arch_path(name)), layer, default_enumerate_settings(), cfg);
    detail += std::string(detail.empty() ? "" : "; ") + name + " counts";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      detail += " " + std::to_string(rows[i].valid_count);
      if (!rows[i].best) {
        ok = false;
        continue;
      }
      if (i > 0) {
        ok &= rows[i].valid_count >= rows[i - 1].valid_count;
        ok &= rows[i - 1].best && rows[i].best->edp <= rows[i - 1].best->edp;
      }
    }
    detail += ", min EDP " + fmt("%.3g", rows.front().best ? rows.front().best->edp : NAN) + " -> " +
              fmt("%.3g", rows.back().best ? rows.back().best->edp : NAN) + " pJ*cyc";
  }
  return {ok, detail};
}

// Drops the q_a, q_w, q_o columns, which name the setting itself.
std::string without_bit_columns(const std::string& csv) {
  std::string out;
  for (const auto& line : split(csv, '\n')) {
    const auto cells = split(line, ',');
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c >= 1 && c <= 3) continue;
      out += cells[c];
      out += c + 1 < cells.size() ? "," : "";
    }
    out += '\n';
  }
  return out;
}

// 3. Uniform 6, 7 and 8 bits give identical map outputs on 16-bit words.
Outcome packing_plateau() {
  bool ok = true;
  std::string detail;
  for (const char* arch : {"eyeriss", "simba"}) {
    std::vector<std::string> outs;
    for (const char* b : {"6", "7", "8"}) {
      std::string out;
      ok &= cli({"--quiet", "--arch", arch_path(arch).string(), "--net", net_path("toy").string(), "map", "--uniform",
                 b},
                &out) == 0;
      outs.push_back(without_bit_columns(out));
    }
    const bool same = outs[0] == outs[1] && outs[1] == outs[2] && !outs[0].empty();
    std::string five;
    cli({"--quiet", "--arch", arch_path(arch).string(), "--net", net_path("toy").string(), "map", "--uniform", "5"},
        &five);
    const bool five_differs = without_bit_columns(five) != outs[0];
    ok &= same && five_differs;
    detail += std::string(detail.empty() ? "" : "; ") + arch + (same ? " 6/7/8 byte-identical" : " 6/7/8 DIFFER") +
              (five_differs ? ", 5 differs" : ", 5 unexpectedly equal");
  }
  return {ok, detail + " (q_a/q_w/q_o columns excluded)"};
}

// 4. Uniform 4 bits cuts memory energy below 0.62x of uniform 8; MAC energy unchanged.
Outcome energy_direction() {
  const auto net = load_network(net_path("toy"));
  bool ok = true;
  std::string detail;
  for (const char* name : {"eyeriss", "simba"}) {
    const LayerEvaluator eval(load_arch(arch_path(name)), MapperConfig{});
    const auto u8 = network_metrics(net, decode_genome(Genome::uniform(net.size(), 8), net), eval);
    const auto u4 = network_metrics(net, decode_genome(Genome::uniform(net.size(), 4), net), eval);
    const double ratio = u4.memory_energy_pj / u8.memory_energy_pj;
    ok &= ratio < 0.62 && u4.mac_energy_pj == u8.mac_energy_pj;
    detail += std::string(detail.empty() ? "" : "; ") + name + " memory ratio " + fmt("%.3f", ratio) +
              (u4.mac_energy_pj == u8.mac_energy_pj ? ", MAC identical" : ", MAC DIFFERS");
  }
  return {ok, detail};
}

// 5. Same mapping, weights 8 -> 4 bits: weight word traffic halves exactly.
Outcome exact_halving() {
  const auto arch = load_arch(arch_path("eyeriss"));
  // Power-of-two bounds keep every element count divisible by the packing factors.
  const auto layer = make_layer(LayerKind::Standard, 1, 8, 8, 4, 4, 2, 2);
  const MappingSampler sampler(layer, arch);
  Rng rng(55);
  int checked = 0, exact = 0;
  while (checked < 500) {
    const Mapping m = sampler.sample(rng);
    if (!check_validity(m, layer, arch, {8, 8, 8}).empty()) continue;
    ++checked;
    const auto a = evaluate(m, layer, {8, 8, 8}, arch);
    const auto b = evaluate(m, layer, {8, 4, 8}, arch);
    bool same = true;
    std::int64_t words = 0;
    for (std::size_t l = 0; l < a.levels.size(); ++l) {
      const auto& wa = a.levels[l].tensors[idx(Tensor::Weight)];
      const auto& wb = b.levels[l].tensors[idx(Tensor::Weight)];
      same &= 2 * wb.word_reads == wa.word_reads && 2 * wb.word_writes == wa.word_writes;
      words += wa.word_reads + wa.word_writes;
      for (Tensor t : {Tensor::Input, Tensor::Output})
        same &= a.levels[l].tensors[idx(t)] == b.levels[l].tensors[idx(t)];
    }
    exact += same && words > 0;
  }
  return {exact == checked, std::to_string(exact) + "/" + std::to_string(checked) + " mappings halve exactly"};
}

// 6. Model size tracks packed words well and EDP poorly.
Outcome correlation() {
  std::string out;
  if (cli({"--quiet", "--arch", arch_path("eyeriss").string(), "--net", net_path("toy").string(), "correlate",
           "--samples", "1000"},
          &out) != 0)
    return {false, "correlate failed"};
  double words = NAN, edp = NAN, samples = 0;
  for (const auto& line : split(out, '\n')) {
    const auto w = split(line, ' ');
    if (w.size() != 3 || w[0] != "#") continue;
    if (w[1] == "spearman_size_words") words = std::stod(w[2]);
    if (w[1] == "spearman_size_edp") edp = std::stod(w[2]);
    if (w[1] == "samples") samples = std::stod(w[2]);
  }
  const bool ok = samples == 1000 && words > 0.5 && words < 0.999 && edp < words;
  return {ok, fmt("%.0f samples", samples) + fmt(", spearman size/words %.3f", words) +
                  fmt(", size/EDP %.3f", edp)};
}

// 7. Non-dominated sorting and crowding match brute-force references.
Outcome nsga_oracles() {
  Rng rng(777);
  int fronts_ok = 0, dist_ok = 0;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Individual> pop(50);
    for (auto& ind : pop) {
      // Coarse grids make ties common.
      ind.accuracy = rng.uniform_int(0, 30) / 40.0;
      ind.edp = rng.uniform_int(1, 40) * 1.0e5;
      ind.genome = Genome{{rng.uniform_int(2, 8), rng.uniform_int(2, 8), rng.uniform_int(2, 8), rng.uniform_int(2, 8)}};
    }
    const auto fronts = nondominated_sort(pop);
    fronts_ok += fronts == brute_fronts(pop);
    bool same = true;
    for (const auto& front : fronts) {
      const auto a = crowding_distance(pop, front);
      const auto b = brute_crowding(pop, front);
      for (std::size_t k = 0; k < front.size(); ++k) {
        if (std::isinf(a[k]) || std::isinf(b[k])) {
          same &= std::isinf(a[k]) && std::isinf(b[k]);
          continue;
        }
        const double rel = std::abs(a[k] - b[k]) / std::max(std::abs(b[k]), 1e-300);
        worst = std::max(worst, b[k] == 0.0 ? std::abs(a[k]) : rel);
        same &= b[k] == 0.0 ? a[k] == 0.0 : rel <= 1e-12;
      }
    }
    dist_ok += same;
  }
  return {fronts_ok == 100 && dist_ok == 100, std::to_string(fronts_ok) + "/100 front sets, " +
                                                  std::to_string(dist_ok) + "/100 distance sets" +
                                                  fmt(" (max rel err %.1e)", worst)};
}

// 8. Full search: improves hypervolume, replays exactly, cache-transparent.
Outcome search_end_to_end() {
  const fs::path root = fs::temp_directory_path() / ("qmap-accept-" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::string> common{"--quiet", "--arch", arch_path("eyeriss").string(), "--net",
                                        net_path("toy").string(), "--seed", "2026"};
  const std::vector<std::string> search{"search", "--population", "32", "--offspring", "16", "--generations", "20",
                                        "--oracle", "surrogate"};
  auto run = [&](const fs::path& out, bool cache) {
    auto args = common;
    if (!cache) args.push_back("--no-cache");
    args.push_back("--out");
    args.push_back(out.string());
    args.insert(args.end(), search.begin(), search.end());
    return cli(args);
  };
  Outcome o;
  if (run(root / "cached", true) != 0 || run(root / "uncached", false) != 0) {
    fs::remove_all(root);
    return {false, "search failed"};
  }
  const auto manifest = nlohmann::json::parse(slurp(root / "cached" / "manifest.json"));
  const double hv0 = manifest.at("search").at("hypervolume_initial").get<double>();
  const double hv1 = manifest.at("search").at("hypervolume_final").get<double>();
  const bool improved = hv1 > hv0;

  bool cache_same = true;
  for (const char* f : {"pareto.csv", "generations.csv"})
    cache_same &= slurp(root / "cached" / f) == slurp(root / "uncached" / f);

  std::string replay_out;
  const int rc = cli({"--quiet", "replay", (root / "cached" / "manifest.json").string(), "--out",
                      (root / "replayed").string()},
                     &replay_out);
  const bool replayed = rc == 0 && replay_out.find("DIFFERENT") == std::string::npos &&
                        replay_out.find("pareto.csv: identical") != std::string::npos &&
                        slurp(root / "cached" / "pareto.csv") == slurp(root / "replayed" / "pareto.csv");
  const std::size_t front = split(slurp(root / "cached" / "pareto.csv"), '\n').size() - 1;
  fs::remove_all(root);
  o.pass = improved && cache_same && replayed;
  o.detail = fmt("hypervolume %.4g", hv0) + fmt(" -> %.4g", hv1) + ", front " + std::to_string(front) +
             (replayed ? ", replay identical" : ", replay DIFFERS") +
             (cache_same ? ", cache on/off identical" : ", cache on/off DIFFER");
  return o;
}

// 9. Operator rates.
Outcome operator_statistics() {
  const int n = 10000;
  Rng rng(909);
  const Genome a{{2, 3, 4, 5, 6, 7, 2, 3, 4, 5, 6, 7}};
  const Genome b = Genome::uniform(6, 8);
  long inherited = 0, genes = 0;
  double worst_gene = 0.5;
  std::vector<int> per_gene(a.size(), 0);
  for (int i = 0; i < n; ++i) {
    const auto c = uniform_crossover(a, b, rng);
    for (std::size_t k = 0; k < c.size(); ++k) {
      const bool from_a = c.genes[k] == a.genes[k];
      per_gene[k] += from_a;
      inherited += from_a;
      ++genes;
    }
  }
  bool ok = true;
  for (int count : per_gene) {
    const double f = static_cast<double>(count) / n;
    if (std::abs(f - 0.5) > std::abs(worst_gene - 0.5)) worst_gene = f;
    ok &= std::abs(f - 0.5) <= 0.05;
  }
  const double overall = static_cast<double>(inherited) / static_cast<double>(genes);

  int resets = 0, replaces = 0;
  const double p_mut = 0.10, p_acc = 0.05;
  for (int i = 0; i < n; ++i) {
    MutationTrace tr;
    mutate(a, rng, p_mut, p_acc, &tr);
    resets += tr.reset;
    replaces += tr.replace;
  }
  auto within = [&](int hits, double p) { return std::abs(hits - n * p) <= 3 * std::sqrt(n * p * (1 - p)); };
  ok &= within(replaces, p_mut) && within(resets, p_acc);
  return {ok, fmt("inheritance %.4f", overall) + fmt(" (worst gene %.4f)", worst_gene) +
                  fmt(", p_mut rate %.4f", static_cast<double>(replaces) / n) +
                  fmt(", p_mutAcc rate %.4f", static_cast<double>(resets) / n)};
}

}  // namespace

int main() {
  set_quiet(true);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"cost model equals loop-nest interpreter", interpreter_equivalence},
      {"valid-mapping and min-EDP trend over bit settings", table_trend},
      {"no packing benefit at 6, 7 and 8 bits", packing_plateau},
      {"uniform-4 memory energy below 0.62x uniform-8", energy_direction},
      {"weight word traffic halves from 8 to 4 bits", exact_halving},
      {"model size correlates with words, less with EDP", correlation},
      {"NSGA-II sorting and crowding match brute force", nsga_oracles},
      {"search improves, replays and ignores the cache", search_end_to_end},
      {"crossover and mutation rates", operator_statistics},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - t0;
    failed += !o.pass;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  criterion " << (i + 1) << ": " << criteria[i].first << ": "
              << o.detail << fmt(" [%.1f s]", dt.count()) << std::endl;
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - static_cast<std::size_t>(failed) << "/"
            << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
