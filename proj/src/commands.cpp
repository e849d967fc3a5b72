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

#include "qmap/commands.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <omp.h>
#include <set>
#include <sstream>
#include <unistd.h>

#include "qmap/log.hpp"
#include "qmap/packing.hpp"
#include "qmap/stats.hpp"
#include "qmap/util.hpp"

namespace qmap {

using nlohmann::json;
namespace fs = std::filesystem;

Cell text_cell(std::string s) { return {std::move(s), false}; }
Cell int_cell(std::int64_t v) { return {std::to_string(v), true}; }
Cell real_cell(double v) { return {format_double(v), std::isfinite(v)}; }

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + "\"";
}

}  // namespace

std::string render(const Table& t, OutputFormat fmt) {
  std::ostringstream os;
  switch (fmt) {
    case OutputFormat::Csv: {
      for (std::size_t c = 0; c < t.columns.size(); ++c) os << (c ? "," : "") << csv_field(t.columns[c]);
      os << '\n';
      for (const auto& row : t.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) os << (c ? "," : "") << csv_field(row[c].text);
        os << '\n';
      }
      break;
    }
    case OutputFormat::Table: {
      std::vector<std::size_t> width(t.columns.size());
      for (std::size_t c = 0; c < t.columns.size(); ++c) width[c] = t.columns[c].size();
      for (const auto& row : t.rows)
        for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].text.size());
      auto line = [&](auto cell_text, auto right_align) {
        for (std::size_t c = 0; c < t.columns.size(); ++c) {
          if (c) os << "  ";
          os << (right_align(c) ? std::right : std::left) << std::setw(static_cast<int>(width[c]))
             << cell_text(c);
        }
        os << '\n';
      };
      line([&](std::size_t c) { return t.columns[c]; }, [](std::size_t) { return false; });
      for (const auto& row : t.rows)
        line([&](std::size_t c) { return row[c].text; }, [&](std::size_t c) { return row[c].numeric; });
      break;
    }
    case OutputFormat::Json: {
      json arr = json::array();
      for (const auto& row : t.rows) {
        json obj = json::object();
        for (std::size_t c = 0; c < row.size(); ++c) {
          if (row[c].numeric)
            obj[t.columns[c]] = json::parse(row[c].text);
          else
            obj[t.columns[c]] = row[c].text;
        }
        arr.push_back(obj);
      }
      os << arr.dump(2) << '\n';
      break;
    }
  }
  return os.str();
}

std::vector<LayerQuant> default_enumerate_settings() {
  return {{16, 16, 16}, {8, 8, 8}, {8, 4, 8}, {8, 2, 8}, {4, 4, 4}, {2, 2, 2}};
}

std::vector<EnumerateRow> run_enumerate(const ArchitectureSpec& arch, const LayerWorkload& layer,
                                        const std::vector<LayerQuant>& settings, const MapperConfig& cfg) {
  std::vector<EnumerateRow> rows;
  for (const auto& q : settings) {
    SearchOutcome o = count_valid(layer, arch, q, cfg);
    EnumerateRow r;
    r.q = q;
    r.valid_count = o.valid_count;
    r.examined = o.examined;
    r.best = o.best_metrics;
    if (o.best) r.best_mapping = o.best->encode();
    rows.push_back(std::move(r));
  }
  return rows;
}

Table enumerate_table(const std::vector<EnumerateRow>& rows) {
  Table t;
  t.columns = {"q_a", "q_w", "q_o", "valid_mappings", "examined", "min_edp_j_cycles", "energy_j", "cycles",
               "best_mapping"};
  for (const auto& r : rows) {
    std::vector<Cell> row{int_cell(r.q.q_a), int_cell(r.q.q_w), int_cell(r.q.q_o), int_cell(r.valid_count),
                          int_cell(r.examined)};
    if (r.best) {
      row.push_back(real_cell(r.best->edp * kJoulesPerPicojoule));
      row.push_back(real_cell(r.best->total_energy_pj * kJoulesPerPicojoule));
      row.push_back(int_cell(r.best->cycles));
    } else {
      row.insert(row.end(), {text_cell(""), text_cell(""), text_cell("")});
    }
    row.push_back(text_cell(r.best_mapping));
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table map_table(const ArchitectureSpec& arch, const NetworkSpec& net, const QuantConfig& q,
                const NetworkMetrics& nm) {
  Table t;
  t.columns = {"layer", "q_a", "q_w", "q_o"};
  for (int l = arch.num_levels() - 1; l >= 0; --l) t.columns.push_back("energy_pj_" + arch.level(l).name);
  for (const char* c : {"energy_pj_memory", "energy_pj_mac", "energy_pj_total", "cycles", "edp_j_cycles"})
    t.columns.push_back(c);

  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const MappingMetrics& m = nm.layers[i].metrics;
    std::vector<Cell> row{text_cell(net.layers[i].name), int_cell(q.layers[i].q_a), int_cell(q.layers[i].q_w),
                          int_cell(q.layers[i].q_o)};
    for (int l = arch.num_levels() - 1; l >= 0; --l)
      row.push_back(real_cell(m.levels[static_cast<std::size_t>(l)].energy_pj));
    row.push_back(real_cell(m.memory_energy_pj));
    row.push_back(real_cell(m.mac_energy_pj));
    row.push_back(real_cell(m.total_energy_pj));
    row.push_back(int_cell(m.cycles));
    row.push_back(real_cell(m.edp * kJoulesPerPicojoule));
    t.rows.push_back(std::move(row));
  }
  std::vector<Cell> total{text_cell("TOTAL"), text_cell(""), text_cell(""), text_cell("")};
  for (int l = arch.num_levels() - 1; l >= 0; --l)
    total.push_back(real_cell(nm.level_energy_pj[static_cast<std::size_t>(l)]));
  total.push_back(real_cell(nm.memory_energy_pj));
  total.push_back(real_cell(nm.mac_energy_pj));
  total.push_back(real_cell(nm.total_energy_pj));
  total.push_back(int_cell(nm.cycles));
  total.push_back(real_cell(nm.edp * kJoulesPerPicojoule));
  t.rows.push_back(std::move(total));
  return t;
}

std::int64_t packed_weight_words(const NetworkSpec& net, const QuantConfig& q, const ArchitectureSpec& arch) {
  const int word_bits = arch.level(arch.num_levels() - 1).word_bits;
  std::int64_t words = 0;
  for (std::size_t i = 0; i < net.layers.size(); ++i)
    words += words_needed(weight_count(net.layers[i]), q.layers[i].q_w, word_bits);
  return words;
}

CorrelateResult run_correlate(const NetworkSpec& net, const LayerEvaluator& evaluator, std::size_t samples,
                              std::uint64_t seed) {
  if (samples < 2) throw std::invalid_argument("correlate needs at least 2 samples");
  std::vector<Genome> genomes{Genome::uniform(net.layers.size(), kMaxGeneBits)};
  std::set<Genome> seen(genomes.begin(), genomes.end());
  Rng rng(derive_seed(seed, 0x636f7272 /* "corr" */));
  for (std::size_t attempts = 0; genomes.size() < samples; ++attempts) {
    if (attempts > 100 * samples) throw std::runtime_error("could not draw enough distinct genomes");
    Genome g = Genome::uniform(net.layers.size(), kMaxGeneBits);
    for (auto& gene : g.genes) gene = rng.uniform_int(kMinGeneBits, kMaxGeneBits);
    if (seen.insert(g).second) genomes.push_back(std::move(g));
  }

  CorrelateResult r;
  r.rows.resize(genomes.size());
  std::vector<std::exception_ptr> errors(genomes.size());
  const auto n = static_cast<std::int64_t>(genomes.size());
#pragma omp parallel for schedule(dynamic, 4)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      const QuantConfig q = decode_genome(genomes[k], net);
      const NetworkMetrics nm = network_metrics(net, q, evaluator, false);
      CorrelateRow& row = r.rows[k];
      row.genome = genomes[k];
      row.reference = k == 0;
      row.model_size_bits = model_size_bits(net, q);
      row.memory_words = packed_weight_words(net, q, evaluator.arch());
      row.word_traffic = nm.word_traffic;
      row.edp = nm.edp;
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::vector<double> size, words, edp;
  for (const auto& row : r.rows) {
    size.push_back(static_cast<double>(row.model_size_bits));
    words.push_back(static_cast<double>(row.memory_words));
    edp.push_back(row.edp);
  }
  r.pearson_size_words = pearson(size, words);
  r.spearman_size_words = spearman(size, words);
  r.pearson_size_edp = pearson(size, edp);
  r.spearman_size_edp = spearman(size, edp);
  return r;
}

Table correlate_table(const CorrelateResult& r) {
  Table t;
  t.columns = {"genome", "reference", "model_size_bits", "memory_words", "word_traffic", "edp_j_cycles"};
  for (const auto& row : r.rows)
    t.rows.push_back({text_cell(format_genome(row.genome)), int_cell(row.reference ? 1 : 0),
                      int_cell(row.model_size_bits), int_cell(row.memory_words), int_cell(row.word_traffic),
                      real_cell(row.edp * kJoulesPerPicojoule)});
  return t;
}

namespace {

std::vector<Cell> individual_cells(const Individual& ind) {
  return {text_cell(format_genome(ind.genome)), real_cell(ind.accuracy), real_cell(ind.edp * kJoulesPerPicojoule),
          real_cell(ind.energy_pj * kJoulesPerPicojoule), int_cell(ind.cycles), int_cell(ind.model_size_bits)};
}

const std::vector<std::string> kIndividualColumns{"genome", "accuracy", "edp_j_cycles", "energy_j", "cycles",
                                                  "model_size_bits"};

}  // namespace

Table pareto_table(const std::vector<Individual>& front) {
  Table t;
  t.columns = kIndividualColumns;
  for (const auto& ind : front) t.rows.push_back(individual_cells(ind));
  return t;
}

Table generations_table(const SearchResult& r) {
  Table t;
  t.columns = {"generation"};
  t.columns.insert(t.columns.end(), kIndividualColumns.begin(), kIndividualColumns.end());
  auto add = [&](int gen, const std::vector<Individual>& front) {
    for (const auto& ind : front) {
      std::vector<Cell> row{int_cell(gen)};
      auto cells = individual_cells(ind);
      row.insert(row.end(), cells.begin(), cells.end());
      t.rows.push_back(std::move(row));
    }
  };
  add(0, r.initial_front);
  for (std::size_t g = 0; g < r.snapshots.size(); ++g) add(static_cast<int>(g + 1), r.snapshots[g]);
  return t;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp-" + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    f.flush();
    if (!f) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Command line

namespace {

std::atomic<bool> g_interrupted{false};
extern "C" void on_sigint(int) { g_interrupted.store(true); }

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string command;
  std::string arch_path;
  std::string net_path;
  std::uint64_t seed = 0;
  int jobs = 0;
  std::string cache_dir;
  bool no_cache = false;
  std::string format = "csv";
  std::string out_dir;
  std::string mapper = "random";
  bool mapper_given = false;
  std::int64_t valid_target = 2000;
  std::int64_t sample_budget = 200000;
  bool quiet = false;

  // enumerate
  std::string layer;
  std::string bits;
  // map
  int uniform = 0;
  std::string genome;
  // correlate
  std::size_t samples = 1000;
  // search
  SearchConfig search;
  double time_budget = 0.0;
  std::string oracle = "surrogate";
  std::string oracle_cmd;
  std::size_t oracle_pool = 0;
  std::int64_t oracle_timeout_ms = 60000;
  int epochs = 5;
  // replay
  std::string manifest;
};

OutputFormat parse_format(const std::string& f) {
  if (f == "csv") return OutputFormat::Csv;
  if (f == "table") return OutputFormat::Table;
  if (f == "json") return OutputFormat::Json;
  throw UsageError("unknown format '" + f + "'");
}

std::string extension(OutputFormat f) {
  switch (f) {
    case OutputFormat::Csv: return ".csv";
    case OutputFormat::Table: return ".txt";
    case OutputFormat::Json: return ".json";
  }
  return "";
}

MapperConfig mapper_config(const Options& o) {
  MapperConfig cfg;
  cfg.mode = o.mapper == "exhaustive" ? MapperConfig::Mode::Exhaustive : MapperConfig::Mode::RandomSearch;
  cfg.valid_target = o.valid_target;
  cfg.sample_budget = o.sample_budget;
  cfg.seed = o.seed;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

std::shared_ptr<EvaluationCache> open_cache(const Options& o) {
  if (o.no_cache) return nullptr;
  if (!o.cache_dir.empty()) return std::make_shared<EvaluationCache>(fs::path(o.cache_dir));
  if (const char* env = std::getenv("QMAP_CACHE_DIR"); env && *env)
    return std::make_shared<EvaluationCache>(fs::path(env));
  return std::make_shared<EvaluationCache>();
}

std::string absolute(const std::string& p) { return p.empty() ? p : fs::absolute(p).lexically_normal().string(); }

std::vector<LayerQuant> parse_bit_settings(const std::string& text) {
  // "16,16,16;8,4,8"
  std::vector<LayerQuant> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    if (item.empty()) continue;
    const Genome g = parse_genome(item);
    if (g.size() != 3) throw UsageError("bit setting '" + item + "' needs three values q_a,q_w,q_o");
    for (int b : g.genes)
      if (b < 1 || b > 64) throw UsageError("bit width " + std::to_string(b) + " out of range");
    out.push_back({g.genes[0], g.genes[1], g.genes[2]});
  }
  if (out.empty()) throw UsageError("no bit settings given");
  return out;
}

// Arguments that reproduce the run (output directory excluded).
std::vector<std::string> canonical_args(const Options& o) {
  std::vector<std::string> a{o.command};
  auto add = [&](const std::string& k, const std::string& v) {
    a.push_back(k);
    a.push_back(v);
  };
  if (!o.arch_path.empty()) add("--arch", absolute(o.arch_path));
  if (!o.net_path.empty()) add("--net", absolute(o.net_path));
  add("--seed", std::to_string(o.seed));
  add("--format", o.format);
  add("--mapper", o.mapper);
  add("--valid-target", std::to_string(o.valid_target));
  add("--sample-budget", std::to_string(o.sample_budget));
  if (o.no_cache) a.push_back("--no-cache");
  if (o.command == "enumerate") {
    if (!o.layer.empty()) add("--layer", o.layer);
    if (!o.bits.empty()) add("--bits", o.bits);
  } else if (o.command == "map") {
    if (o.uniform) add("--uniform", std::to_string(o.uniform));
    if (!o.genome.empty()) add("--genome", o.genome);
  } else if (o.command == "correlate") {
    add("--samples", std::to_string(o.samples));
  } else if (o.command == "search") {
    add("--population", std::to_string(o.search.population));
    add("--offspring", std::to_string(o.search.offspring));
    add("--generations", std::to_string(o.search.generations));
    add("--p-mut", format_double(o.search.p_mut));
    add("--p-mut-acc", format_double(o.search.p_mut_acc));
    if (o.time_budget > 0) add("--time-budget", format_double(o.time_budget));
    add("--oracle", o.oracle);
    if (!o.oracle_cmd.empty()) add("--oracle-cmd", o.oracle_cmd);
    if (o.oracle_pool) add("--oracle-pool", std::to_string(o.oracle_pool));
    add("--oracle-timeout-ms", std::to_string(o.oracle_timeout_ms));
    add("--epochs", std::to_string(o.epochs));
  }
  return a;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct RunContext {
  Options opts;
  std::optional<ArchitectureSpec> arch;
  std::optional<NetworkSpec> net;
  std::string started;
  json extra = json::object();
  std::vector<std::pair<std::string, std::string>> outputs;  // file name, content
};

json manifest_json(const RunContext& ctx, bool complete) {
  const Options& o = ctx.opts;
  json m;
  m["tool"] = "qmap";
  m["version"] = std::string(kToolVersion);
  m["command"] = o.command;
  m["args"] = canonical_args(o);
  if (ctx.arch) m["arch"] = {{"path", absolute(o.arch_path)}, {"hash", hex64(canonical_hash(*ctx.arch))}};
  if (ctx.net) m["net"] = {{"path", absolute(o.net_path)}, {"hash", hex64(network_hash(*ctx.net))},
                           {"layers", ctx.net->layers.size()}};
  m["seed"] = o.seed;
  m["jobs"] = o.jobs;
  const MapperConfig mc = mapper_config(o);
  m["mapper"] = {{"mode", std::string(mode_name(mc.mode))}, {"valid_target", mc.valid_target},
                 {"sample_budget", mc.sample_budget}, {"seed", mc.seed},
                 {"exhaustive_ceiling", mc.exhaustive_ceiling}};
  m["cache"] = {{"enabled", !o.no_cache}, {"dir", o.cache_dir}};
  m["started_utc"] = ctx.started;
  m["finished_utc"] = utc_now();
  m["complete"] = complete;
  json outs = json::object();
  for (const auto& [name, content] : ctx.outputs) outs[name] = {{"fnv1a64", hex64(Fnv1a().str(content).digest())}};
  m["outputs"] = outs;
  for (auto it = ctx.extra.begin(); it != ctx.extra.end(); ++it) m[it.key()] = it.value();
  return m;
}

void finish_outputs(RunContext& ctx, bool complete) {
  if (ctx.opts.out_dir.empty()) return;
  const fs::path dir(ctx.opts.out_dir);
  fs::create_directories(dir);
  for (const auto& [name, content] : ctx.outputs) write_file_atomic(dir / name, content);
  write_file_atomic(dir / "manifest.json", manifest_json(ctx, complete).dump(2) + "\n");
}

const ArchitectureSpec& need_arch(RunContext& ctx) {
  if (ctx.opts.arch_path.empty()) throw UsageError("--arch is required");
  if (!ctx.arch) ctx.arch = load_arch(ctx.opts.arch_path);
  return *ctx.arch;
}

const NetworkSpec& need_net(RunContext& ctx) {
  if (ctx.opts.net_path.empty()) throw UsageError("--net is required");
  if (!ctx.net) ctx.net = load_network(ctx.opts.net_path);
  return *ctx.net;
}

int cmd_enumerate(RunContext& ctx, std::ostream& out) {
  Options& o = ctx.opts;
  if (!o.mapper_given) o.mapper = "exhaustive";
  const auto& arch = need_arch(ctx);
  const auto& net = need_net(ctx);
  const LayerWorkload* layer = nullptr;
  if (o.layer.empty()) {
    if (net.layers.size() != 1) throw UsageError("--layer is required for a multi-layer network");
    layer = &net.layers.front();
  } else {
    layer = net.find(o.layer);
    if (!layer) throw UsageError("unknown layer '" + o.layer + "' in network '" + net.name + "'");
  }
  const auto settings = o.bits.empty() ? default_enumerate_settings() : parse_bit_settings(o.bits);
  const auto rows = run_enumerate(arch, *layer, settings, mapper_config(o));
  const OutputFormat fmt = parse_format(o.format);
  const std::string text = render(enumerate_table(rows), fmt);
  out << text;
  ctx.extra["layer"] = layer->name;
  ctx.outputs.push_back({"enumerate" + extension(fmt), text});
  finish_outputs(ctx, true);
  return 0;
}

int cmd_map(RunContext& ctx, std::ostream& out) {
  const Options& o = ctx.opts;
  const auto& arch = need_arch(ctx);
  const auto& net = need_net(ctx);
  if ((o.uniform != 0) == !o.genome.empty()) throw UsageError("give exactly one of --uniform or --genome");
  Genome g;
  if (o.uniform) {
    if (o.uniform < kMinGeneBits || o.uniform > kMaxGeneBits)
      throw UsageError("--uniform must be within [" + std::to_string(kMinGeneBits) + ", " +
                       std::to_string(kMaxGeneBits) + "]");
    g = Genome::uniform(net.layers.size(), o.uniform);
  } else {
    g = parse_genome(o.genome);
  }
  const QuantConfig q = decode_genome(g, net);
  const LayerEvaluator evaluator(arch, mapper_config(o), open_cache(o));
  const NetworkMetrics nm = network_metrics(net, q, evaluator);
  const OutputFormat fmt = parse_format(o.format);
  const std::string text = render(map_table(arch, net, q, nm), fmt);
  out << text;
  ctx.extra["genome"] = format_genome(g);
  ctx.outputs.push_back({"map" + extension(fmt), text});
  finish_outputs(ctx, true);
  return 0;
}

int cmd_correlate(RunContext& ctx, std::ostream& out) {
  const Options& o = ctx.opts;
  const auto& arch = need_arch(ctx);
  const auto& net = need_net(ctx);
  if (o.samples < 2) throw UsageError("--samples must be >= 2");
  const LayerEvaluator evaluator(arch, mapper_config(o), open_cache(o));
  const CorrelateResult r = run_correlate(net, evaluator, o.samples, o.seed);
  const OutputFormat fmt = parse_format(o.format);
  const std::string text = render(correlate_table(r), fmt);
  const json summary = {{"samples", r.rows.size()},
                        {"pearson_size_words", r.pearson_size_words},
                        {"spearman_size_words", r.spearman_size_words},
                        {"pearson_size_edp", r.pearson_size_edp},
                        {"spearman_size_edp", r.spearman_size_edp}};
  out << text;
  if (fmt == OutputFormat::Json)
    out << summary.dump(2) << '\n';
  else
    for (auto it = summary.begin(); it != summary.end(); ++it) out << "# " << it.key() << " " << it.value() << '\n';
  ctx.extra["summary"] = summary;
  ctx.outputs.push_back({"correlate" + extension(fmt), text});
  ctx.outputs.push_back({"correlate_summary.json", summary.dump(2) + "\n"});
  finish_outputs(ctx, true);
  return 0;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream is(s);
  for (std::string w; is >> w;) out.push_back(w);
  return out;
}

int cmd_search(RunContext& ctx, std::ostream& out, std::ostream& err) {
  Options& o = ctx.opts;
  const auto& arch = need_arch(ctx);
  const auto& net = need_net(ctx);
  if (o.out_dir.empty()) throw UsageError("search needs --out DIR");
  SearchConfig cfg = o.search;
  cfg.seed = o.seed;
  if (o.time_budget > 0) cfg.wall_clock_seconds = o.time_budget;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }

  std::unique_ptr<AccuracyOracle> oracle;
  if (o.oracle == "surrogate") {
    oracle = std::make_unique<SurrogateOracle>(net);
  } else if (o.oracle == "external") {
    OracleEndpoint ep;
    ep.argv = split_words(o.oracle_cmd);
    if (ep.argv.empty()) throw UsageError("--oracle external needs --oracle-cmd");
    ep.timeout = std::chrono::milliseconds(o.oracle_timeout_ms);
    ep.network = net.name;
    ep.epochs = o.epochs;
    const std::size_t pool = o.oracle_pool ? o.oracle_pool : static_cast<std::size_t>(std::max(1, o.jobs));
    oracle = std::make_unique<OraclePool>(ep, pool);
  } else {
    throw UsageError("unknown oracle '" + o.oracle + "'");
  }

  const LayerEvaluator evaluator(arch, mapper_config(o), open_cache(o));
  g_interrupted.store(false);
  auto previous = std::signal(SIGINT, on_sigint);
  SearchHooks hooks;
  hooks.stop = &g_interrupted;
  if (!o.quiet)
    hooks.on_generation = [&](int gen, const std::vector<Individual>& front) {
      err << "generation " << gen << ": front size " << front.size() << '\n';
    };
  SearchResult r;
  try {
    r = run_search(net, evaluator, cfg, *oracle, hooks);
  } catch (...) {
    std::signal(SIGINT, previous);
    throw;
  }
  std::signal(SIGINT, previous);

  const double hv0 = hypervolume(r.initial_front, r.edp_reference);
  const double hv1 = hypervolume(r.archive, r.edp_reference);
  ctx.extra["search"] = {{"population", cfg.population},
                         {"offspring", cfg.offspring},
                         {"generations", cfg.generations},
                         {"generations_completed", r.generations_completed},
                         {"p_mut", cfg.p_mut},
                         {"p_mut_acc", cfg.p_mut_acc},
                         {"bit_range", {cfg.min_bits, cfg.max_bits}},
                         {"wall_clock_seconds", cfg.wall_clock_seconds ? json(*cfg.wall_clock_seconds) : json()},
                         {"evaluations", r.evaluations},
                         {"failed_evaluations", r.failed_evaluations},
                         {"edp_reference_pj_cycles", r.edp_reference},
                         {"hypervolume_initial", hv0},
                         {"hypervolume_final", hv1}};
  ctx.extra["oracle"] = {{"kind", o.oracle}, {"describe", oracle->describe()}, {"epochs", o.epochs}};
  ctx.outputs.push_back({"pareto.csv", render(pareto_table(r.archive), OutputFormat::Csv)});
  ctx.outputs.push_back({"generations.csv", render(generations_table(r), OutputFormat::Csv)});
  const bool complete = r.complete;
  finish_outputs(ctx, complete);
  out << render(pareto_table(r.archive), parse_format(o.format));
  if (g_interrupted.load()) {
    err << "qmap: interrupted after generation " << r.generations_completed << "; partial results written\n";
    return 130;
  }
  if (!complete && !o.quiet)
    err << "qmap: time budget reached after generation " << r.generations_completed << '\n';
  return 0;
}

int run_parsed(Options o, std::ostream& out, std::ostream& err);

int cmd_replay(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out_dir.empty()) throw UsageError("replay needs --out DIR");
  std::ifstream f(o.manifest);
  if (!f) throw UsageError("cannot read manifest " + o.manifest);
  const json m = json::parse(f);
  std::vector<std::string> args{"qmap"};
  for (const auto& a : m.at("args")) args.push_back(a.get<std::string>());
  args.push_back("--out");
  args.push_back(o.out_dir);
  if (o.quiet) args.push_back("--quiet");

  // Inputs must be unchanged for the replay to mean anything.
  if (m.contains("arch") && hex64(canonical_hash(load_arch(m["arch"]["path"].get<std::string>()))) !=
                                m["arch"]["hash"].get<std::string>())
    throw std::runtime_error("architecture file changed since the recorded run");
  if (m.contains("net") && hex64(network_hash(load_network(m["net"]["path"].get<std::string>()))) !=
                               m["net"]["hash"].get<std::string>())
    throw std::runtime_error("network file changed since the recorded run");

  std::ostringstream sink;
  const int rc = run_cli(args, sink, err);
  if (rc != 0) return rc;
  int mismatches = 0;
  for (auto it = m.at("outputs").begin(); it != m.at("outputs").end(); ++it) {
    std::ifstream in(fs::path(o.out_dir) / it.key(), std::ios::binary);
    std::stringstream content;
    content << in.rdbuf();
    const bool same = hex64(Fnv1a().str(content.str()).digest()) == it.value().at("fnv1a64").get<std::string>();
    out << it.key() << ": " << (same ? "identical" : "DIFFERENT") << '\n';
    mismatches += !same;
  }
  return mismatches ? 1 : 0;
}

int run_parsed(Options o, std::ostream& out, std::ostream& err) {
  set_quiet(o.quiet);
  if (o.jobs > 0) omp_set_num_threads(o.jobs);
  RunContext ctx;
  ctx.opts = o;
  ctx.started = utc_now();
  if (o.command == "enumerate") return cmd_enumerate(ctx, out);
  if (o.command == "map") return cmd_map(ctx, out);
  if (o.command == "correlate") return cmd_correlate(ctx, out);
  if (o.command == "search") return cmd_search(ctx, out, err);
  if (o.command == "replay") return cmd_replay(o, out, err);
  throw UsageError("unknown command '" + o.command + "'");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"qmap: quantization-aware accelerator mapping and bit-width search"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--arch", o.arch_path, "Architecture description file");
  app.add_option("--net", o.net_path, "Network description file");
  app.add_option("--seed", o.seed, "Seed for mapper sampling and search");
  app.add_option("--jobs", o.jobs, "Worker threads (0 = OpenMP default)")->check(CLI::NonNegativeNumber);
  app.add_option("--cache-dir", o.cache_dir, "Persistent cache directory (default: $QMAP_CACHE_DIR)");
  app.add_flag("--no-cache", o.no_cache, "Disable result caching");
  app.add_option("--format", o.format, "Output format")->check(CLI::IsMember({"csv", "table", "json"}));
  app.add_option("--out", o.out_dir, "Directory for output files and the run manifest");
  auto* mapper = app.add_option("--mapper", o.mapper, "Mapper mode")->check(CLI::IsMember({"random", "exhaustive"}));
  app.add_option("--valid-target", o.valid_target, "Random mapper: stop after this many valid mappings");
  app.add_option("--sample-budget", o.sample_budget, "Random mapper: maximum candidates drawn");
  app.add_flag("--quiet", o.quiet, "Suppress warnings and progress");

  auto* en = app.add_subcommand("enumerate", "Valid-mapping count and minimum EDP per bit setting");
  en->add_option("--layer", o.layer, "Layer name within --net");
  en->add_option("--bits", o.bits, "Settings 'qa,qw,qo;qa,qw,qo;...'");

  auto* mp = app.add_subcommand("map", "Per-layer energy breakdown for one quantization");
  mp->add_option("--uniform", o.uniform, "Same bit-width for every gene");
  mp->add_option("--genome", o.genome, "Comma-separated genome qa0,qw0,qa1,qw1,...");

  auto* co = app.add_subcommand("correlate", "Model size against packed words and EDP over random genomes");
  co->add_option("--samples", o.samples, "Number of distinct genomes including the all-8 reference");

  auto* se = app.add_subcommand("search", "NSGA-II search over per-layer bit-widths");
  se->add_option("--population", o.search.population, "Parent population size");
  se->add_option("--offspring", o.search.offspring, "Offspring per generation");
  se->add_option("--generations", o.search.generations, "Generation budget");
  se->add_option("--p-mut", o.search.p_mut, "Probability of redrawing one gene");
  se->add_option("--p-mut-acc", o.search.p_mut_acc, "Probability of resetting one layer to 8/8");
  se->add_option("--time-budget", o.time_budget, "Wall-clock budget in seconds");
  se->add_option("--oracle", o.oracle, "Accuracy oracle")->check(CLI::IsMember({"surrogate", "external"}));
  se->add_option("--oracle-cmd", o.oracle_cmd, "Command line of the external oracle");
  se->add_option("--oracle-pool", o.oracle_pool, "External oracle processes (default: --jobs or 1)");
  se->add_option("--oracle-timeout-ms", o.oracle_timeout_ms, "Per-request timeout");
  se->add_option("--epochs", o.epochs, "Fine-tuning epochs passed to the oracle");

  auto* re = app.add_subcommand("replay", "Re-run a recorded run and compare its outputs");
  re->add_option("manifest", o.manifest, "manifest.json of the original run")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    std::ostringstream o_out, o_err;
    const int rc = app.exit(e, o_out, o_err);
    out << o_out.str();
    err << o_err.str();
    return rc == 0 ? 0 : 2;
  }
  o.command = app.get_subcommands().front()->get_name();
  o.mapper_given = mapper->count() > 0;

  try {
    return run_parsed(o, out, err);
  } catch (const UsageError& e) {
    err << "qmap: usage error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    err << "qmap: input error: " << e.what() << '\n';
    return 2;
  } catch (const GenomeError& e) {
    err << "qmap: genome error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "qmap: error: " << e.what() << '\n';
    return 1;
  }
}

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace qmap
