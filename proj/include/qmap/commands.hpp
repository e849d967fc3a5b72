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

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "qmap/archspec.hpp"
#include "qmap/cache.hpp"
#include "qmap/mapspace.hpp"
#include "qmap/network.hpp"
#include "qmap/search.hpp"
#include "qmap/workload.hpp"

namespace qmap {

enum class OutputFormat { Csv, Table, Json };

struct Cell {
  std::string text;
  bool numeric = false;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

Cell text_cell(std::string s);
Cell int_cell(std::int64_t v);
Cell real_cell(double v);

// CSV quotes cells containing separators; JSON is an array of objects.
std::string render(const Table& t, OutputFormat fmt);

inline constexpr double kJoulesPerPicojoule = 1e-12;

struct EnumerateRow {
  LayerQuant q;
  std::int64_t valid_count = 0;
  std::int64_t examined = 0;
  std::optional<MappingMetrics> best;  // absent when no mapping fits
  std::string best_mapping;
};

// The bit settings reported by `enumerate` when none are given.
std::vector<LayerQuant> default_enumerate_settings();

std::vector<EnumerateRow> run_enumerate(const ArchitectureSpec& arch, const LayerWorkload& layer,
                                        const std::vector<LayerQuant>& settings, const MapperConfig& cfg);
Table enumerate_table(const std::vector<EnumerateRow>& rows);

// One row per layer plus a TOTAL row. Energies in pJ (levels outermost
// first), EDP in J * cycles.
Table map_table(const ArchitectureSpec& arch, const NetworkSpec& net, const QuantConfig& q,
                const NetworkMetrics& nm);

struct CorrelateRow {
  Genome genome;
  bool reference = false;
  std::int64_t model_size_bits = 0;
  std::int64_t memory_words = 0;  // packed weight words summed over layers
  std::int64_t word_traffic = 0;  // all word accesses of the best mappings
  double edp = 0.0;               // pJ * cycles
};

struct CorrelateResult {
  std::vector<CorrelateRow> rows;
  double pearson_size_words = 0.0;
  double spearman_size_words = 0.0;
  double pearson_size_edp = 0.0;
  double spearman_size_edp = 0.0;
};

// Words needed to store every layer's weights at its bit-width in the
// outermost level's word size.
std::int64_t packed_weight_words(const NetworkSpec& net, const QuantConfig& q, const ArchitectureSpec& arch);

// `samples` distinct genomes: the all-8 reference first, then uniform random
// draws.
CorrelateResult run_correlate(const NetworkSpec& net, const LayerEvaluator& evaluator, std::size_t samples,
                              std::uint64_t seed);
Table correlate_table(const CorrelateResult& r);

Table pareto_table(const std::vector<Individual>& front);
// Generation 0 is the initial population's front.
Table generations_table(const SearchResult& r);

// Writes via a temporary file in the same directory and a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Full command-line entry point; returns the process exit code.
// 0 success, 1 runtime failure, 2 usage error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace qmap
