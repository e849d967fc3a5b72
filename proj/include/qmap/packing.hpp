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
#include <stdexcept>
#include <string>

namespace qmap {

// Whole elements stored per memory word. Elements never straddle a word
// boundary, so every width in (word/2, word] packs the same as the word
// itself; with 16-bit words 6, 7 and 8 bits all pack two per word.
struct PackingFactor {
  int elements_per_word = 1;
};

inline PackingFactor packing_factor(int element_bits, int word_bits) {
  if (element_bits < 1 || word_bits < 1)
    throw std::invalid_argument("bit widths must be positive");
  if (element_bits > word_bits)
    throw std::invalid_argument("element of " + std::to_string(element_bits) +
                                " bits does not fit a " + std::to_string(word_bits) +
                                "-bit word (multi-word elements are unsupported)");
  return {word_bits / element_bits};
}

inline std::int64_t words_needed(std::int64_t elements, int element_bits, int word_bits) {
  if (elements < 0) throw std::invalid_argument("negative element count");
  const std::int64_t per_word = packing_factor(element_bits, word_bits).elements_per_word;
  return (elements + per_word - 1) / per_word;
}

}  // namespace qmap
