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

#include <compare>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "qmap/types.hpp"

namespace qmap {

enum class LayerKind : std::uint8_t { Standard, Depthwise, FullyConnected };

std::string_view layer_kind_name(LayerKind kind);

struct LayerWorkload {
  std::string name;
  LayerKind kind = LayerKind::Standard;
  DimArray dims = unit_dims();
  int stride = 1;

  std::int64_t dim(Dim d) const { return dims[idx(d)]; }

  // Iteration count of the loop over `d`. A depthwise layer has no separate
  // output-channel loop: M mirrors C and iterates once.
  std::int64_t bound(Dim d) const {
    return (kind == LayerKind::Depthwise && d == Dim::M) ? 1 : dims[idx(d)];
  }

  bool operator==(const LayerWorkload&) const = default;
};

// Throws std::invalid_argument when the layer breaks a kind invariant.
void validate_layer(const LayerWorkload& layer);

struct NetworkSpec {
  std::string name;
  std::vector<LayerWorkload> layers;

  std::size_t size() const { return layers.size(); }
  const LayerWorkload* find(std::string_view layer_name) const;
};

// Does the tensor's index space vary along `d` for this layer kind?
// Weight: {M,C,R,S} (depthwise {C,R,S}); Input: {N,C,P,Q,R,S};
// Output: {N,M,P,Q} (depthwise {N,C,P,Q}).
constexpr bool relevant(LayerKind kind, Tensor t, Dim d) {
  const bool dw = kind == LayerKind::Depthwise;
  switch (t) {
    case Tensor::Weight:
      return d == Dim::C || d == Dim::R || d == Dim::S || (d == Dim::M && !dw);
    case Tensor::Input:
      return d != Dim::M;
    case Tensor::Output:
      return d == Dim::N || d == Dim::P || d == Dim::Q || (dw ? d == Dim::C : d == Dim::M);
  }
  return false;
}

std::int64_t layer_macs(const LayerWorkload& layer);
std::int64_t weight_count(const LayerWorkload& layer);

// Bit-widths of one layer's tensors.
struct LayerQuant {
  int q_a = 8;  // input activations
  int q_w = 8;  // weights
  int q_o = 8;  // outputs and partial sums

  int bits(Tensor t) const {
    switch (t) {
      case Tensor::Input: return q_a;
      case Tensor::Weight: return q_w;
      case Tensor::Output: return q_o;
    }
    return 0;
  }
  static LayerQuant uniform(int b) { return {b, b, b}; }
  auto operator<=>(const LayerQuant&) const = default;
};

struct QuantConfig {
  std::vector<LayerQuant> layers;
  bool operator==(const QuantConfig&) const = default;
};

inline constexpr int kMinGeneBits = 2;
inline constexpr int kMaxGeneBits = 8;
inline constexpr int kLastLayerOutputBits = 8;

// Flat [q_a0, q_w0, q_a1, q_w1, ...].
struct Genome {
  std::vector<int> genes;

  std::size_t size() const { return genes.size(); }
  std::size_t layers() const { return genes.size() / 2; }
  auto operator<=>(const Genome&) const = default;
  bool operator==(const Genome&) const = default;

  static Genome uniform(std::size_t layers, int bits) {
    return Genome{std::vector<int>(2 * layers, bits)};
  }
};

class GenomeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Output width of layer i is the input width of layer i+1; the last layer
// emits kLastLayerOutputBits.
QuantConfig decode_genome(const Genome& g, const NetworkSpec& net);
Genome encode_genome(const QuantConfig& q);

Genome parse_genome(std::string_view text);  // "4,6,8,3"
std::string format_genome(const Genome& g, char sep = ',');

std::int64_t model_size_bits(const NetworkSpec& net, const QuantConfig& q);

NetworkSpec parse_network(std::string_view text);
NetworkSpec load_network(const std::filesystem::path& path);
std::uint64_t network_hash(const NetworkSpec& net);

}  // namespace qmap
