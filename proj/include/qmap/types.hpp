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

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace qmap {

// The seven loop dimensions of a convolutional workload.
enum class Dim : std::uint8_t { N, M, C, P, Q, R, S };

inline constexpr std::size_t kNumDims = 7;
inline constexpr std::array<Dim, kNumDims> kAllDims{Dim::N, Dim::M, Dim::C, Dim::P,
                                                   Dim::Q, Dim::R, Dim::S};

enum class Tensor : std::uint8_t { Input, Weight, Output };

inline constexpr std::size_t kNumTensors = 3;
inline constexpr std::array<Tensor, kNumTensors> kAllTensors{Tensor::Input, Tensor::Weight,
                                                            Tensor::Output};

using DimArray = std::array<std::int64_t, kNumDims>;

constexpr std::size_t idx(Dim d) { return static_cast<std::size_t>(d); }
constexpr std::size_t idx(Tensor t) { return static_cast<std::size_t>(t); }

constexpr char dim_letter(Dim d) { return "NMCPQRS"[idx(d)]; }

constexpr std::optional<Dim> dim_from_letter(char c) {
  for (Dim d : kAllDims)
    if (dim_letter(d) == c) return d;
  return std::nullopt;
}

constexpr std::string_view tensor_name(Tensor t) {
  switch (t) {
    case Tensor::Input: return "Input";
    case Tensor::Weight: return "Weight";
    case Tensor::Output: return "Output";
  }
  return "?";
}

constexpr std::optional<Tensor> tensor_from_name(std::string_view s) {
  for (Tensor t : kAllTensors)
    if (tensor_name(t) == s) return t;
  return std::nullopt;
}

constexpr DimArray unit_dims() { return {1, 1, 1, 1, 1, 1, 1}; }

}  // namespace qmap
