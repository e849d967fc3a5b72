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

#include "qmap/workload.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "qmap/archspec.hpp"
#include "qmap/util.hpp"
#include "yaml_support.hpp"

namespace qmap {

std::string_view layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::Standard: return "standard";
    case LayerKind::Depthwise: return "depthwise";
    case LayerKind::FullyConnected: return "fc";
  }
  return "?";
}

void validate_layer(const LayerWorkload& layer) {
  for (Dim d : kAllDims) {
    if (layer.dim(d) < 1)
      throw std::invalid_argument("layer '" + layer.name + "': bound " + dim_letter(d) +
                                  " must be >= 1");
  }
  if (layer.stride < 1) throw std::invalid_argument("layer '" + layer.name + "': stride must be >= 1");
  if (layer.kind == LayerKind::Depthwise && layer.dim(Dim::M) != layer.dim(Dim::C))
    throw std::invalid_argument("layer '" + layer.name + "': depthwise layer needs M == C");
  if (layer.kind == LayerKind::FullyConnected) {
    for (Dim d : {Dim::P, Dim::Q, Dim::R, Dim::S})
      if (layer.dim(d) != 1)
        throw std::invalid_argument("layer '" + layer.name +
                                    "': fully-connected layer needs P=Q=R=S=1");
  }
}

const LayerWorkload* NetworkSpec::find(std::string_view layer_name) const {
  for (const auto& l : layers)
    if (l.name == layer_name) return &l;
  return nullptr;
}

std::int64_t layer_macs(const LayerWorkload& layer) {
  std::int64_t macs = 1;
  for (Dim d : kAllDims) macs *= layer.bound(d);
  return macs;
}

std::int64_t weight_count(const LayerWorkload& layer) {
  const std::int64_t rs = layer.dim(Dim::R) * layer.dim(Dim::S);
  switch (layer.kind) {
    case LayerKind::Standard: return layer.dim(Dim::M) * layer.dim(Dim::C) * rs;
    case LayerKind::Depthwise: return layer.dim(Dim::C) * rs;
    case LayerKind::FullyConnected: return layer.dim(Dim::M) * layer.dim(Dim::C);
  }
  return 0;
}

QuantConfig decode_genome(const Genome& g, const NetworkSpec& net) {
  if (g.size() != 2 * net.size())
    throw GenomeError("genome has " + std::to_string(g.size()) + " genes, network '" + net.name +
                      "' needs " + std::to_string(2 * net.size()));
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g.genes[i] < kMinGeneBits || g.genes[i] > kMaxGeneBits)
      throw GenomeError("gene " + std::to_string(i) + " = " + std::to_string(g.genes[i]) +
                        " outside [" + std::to_string(kMinGeneBits) + "," +
                        std::to_string(kMaxGeneBits) + "]");
  }
  QuantConfig q;
  q.layers.resize(net.size());
  for (std::size_t i = 0; i < net.size(); ++i) {
    q.layers[i].q_a = g.genes[2 * i];
    q.layers[i].q_w = g.genes[2 * i + 1];
    q.layers[i].q_o = i + 1 < net.size() ? g.genes[2 * (i + 1)] : kLastLayerOutputBits;
  }
  return q;
}

Genome encode_genome(const QuantConfig& q) {
  Genome g;
  g.genes.reserve(2 * q.layers.size());
  for (const auto& l : q.layers) {
    g.genes.push_back(l.q_a);
    g.genes.push_back(l.q_w);
  }
  return g;
}

Genome parse_genome(std::string_view text) {
  Genome g;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view tok = text.substr(pos, end - pos);
    while (!tok.empty() && tok.front() == ' ') tok.remove_prefix(1);
    while (!tok.empty() && tok.back() == ' ') tok.remove_suffix(1);
    int v = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size())
      throw GenomeError("malformed genome token '" + std::string(tok) + "'");
    g.genes.push_back(v);
    pos = end + 1;
  }
  return g;
}

std::string format_genome(const Genome& g, char sep) {
  std::string out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (i) out += sep;
    out += std::to_string(g.genes[i]);
  }
  return out;
}

std::int64_t model_size_bits(const NetworkSpec& net, const QuantConfig& q) {
  if (q.layers.size() != net.size())
    throw std::invalid_argument("quant config does not match network length");
  std::int64_t bits = 0;
  for (std::size_t i = 0; i < net.size(); ++i) bits += weight_count(net.layers[i]) * q.layers[i].q_w;
  return bits;
}

namespace {

using yaml_support::fail;

LayerKind parse_kind(const YAML::Node& n) {
  const std::string s = yaml_support::get_string(n);
  if (s == "standard" || s == "conv") return LayerKind::Standard;
  if (s == "depthwise" || s == "dw") return LayerKind::Depthwise;
  if (s == "fc" || s == "fully_connected") return LayerKind::FullyConnected;
  fail(n, "unknown layer kind '" + s + "'");
}

}  // namespace

NetworkSpec parse_network(std::string_view text) {
  const YAML::Node root = yaml_support::load(text);
  if (!root.IsMap()) fail(root, "network document must be a mapping");
  yaml_support::reject_unknown_keys(root, {"name", "layers"});
  NetworkSpec net;
  net.name = yaml_support::get_string(yaml_support::require(root, "name"));
  const YAML::Node layers = yaml_support::require(root, "layers");
  if (!layers.IsSequence() || layers.size() == 0) fail(layers, "layers must be a nonempty list");

  std::set<std::string> names;
  for (const auto& node : layers) {
    if (!node.IsMap()) fail(node, "layer entry must be a mapping");
    yaml_support::reject_unknown_keys(
        node, {"name", "kind", "n", "m", "c", "p", "q", "r", "s", "stride", "skip_shape_check"});
    LayerWorkload layer;
    layer.name = yaml_support::get_string(yaml_support::require(node, "name"));
    if (!names.insert(layer.name).second) fail(node, "duplicate layer name '" + layer.name + "'");
    layer.kind = node["kind"] ? parse_kind(node["kind"]) : LayerKind::Standard;
    static constexpr std::pair<const char*, Dim> kKeys[] = {
        {"n", Dim::N}, {"m", Dim::M}, {"c", Dim::C}, {"p", Dim::P},
        {"q", Dim::Q}, {"r", Dim::R}, {"s", Dim::S}};
    for (auto [key, d] : kKeys) {
      if (const YAML::Node v = node[key]) {
        layer.dims[idx(d)] = yaml_support::get_int(v);
      } else if (d == Dim::M && layer.kind == LayerKind::Depthwise) {
        layer.dims[idx(d)] = node["c"] ? yaml_support::get_int(node["c"]) : 1;
      } else if (d == Dim::N || layer.kind == LayerKind::FullyConnected) {
        layer.dims[idx(d)] = 1;
      } else {
        fail(node, "layer '" + layer.name + "': missing bound '" + key + "'");
      }
    }
    layer.stride = node["stride"] ? static_cast<int>(yaml_support::get_int(node["stride"])) : 1;
    try {
      validate_layer(layer);
    } catch (const std::invalid_argument& e) {
      fail(node, e.what());
    }
    const bool skip_check =
        node["skip_shape_check"] && yaml_support::get_bool(node["skip_shape_check"]);
    if (!net.layers.empty() && !skip_check) {
      const LayerWorkload& prev = net.layers.back();
      if (prev.dim(Dim::M) != layer.dim(Dim::C))
        fail(node, "layer '" + layer.name + "': C=" + std::to_string(layer.dim(Dim::C)) +
                       " does not match previous layer '" + prev.name +
                       "' M=" + std::to_string(prev.dim(Dim::M)));
    }
    net.layers.push_back(std::move(layer));
  }
  return net;
}

NetworkSpec load_network(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open network file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_network(ss.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ":" + e.what());
  }
}

std::uint64_t network_hash(const NetworkSpec& net) {
  Fnv1a h;
  h.str("qmap-net-v1").str(net.name).u64(net.size());
  for (const auto& l : net.layers) {
    h.str(l.name).u64(static_cast<std::uint64_t>(l.kind)).i64(l.stride);
    for (Dim d : kAllDims) h.i64(l.dim(d));
  }
  return h.digest();
}

}  // namespace qmap
