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

// Small helpers shared by the architecture and network readers.

#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <initializer_list>
#include <string>
#include <string_view>

#include "qmap/archspec.hpp"

namespace qmap::yaml_support {

[[noreturn]] inline void fail(const YAML::Node& at, const std::string& msg) {
  const YAML::Mark mark = at.Mark();
  if (mark.is_null()) throw ParseError(msg);
  throw ParseError(msg, mark.line + 1, mark.column + 1);
}

inline YAML::Node load(std::string_view text) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    throw ParseError("syntax error: " + e.msg, e.mark.line + 1, e.mark.column + 1);
  }
}

inline YAML::Node require(const YAML::Node& parent, const char* key) {
  YAML::Node child = parent[key];
  if (!child) fail(parent, std::string("missing required key '") + key + "'");
  return child;
}

inline void reject_unknown_keys(const YAML::Node& node, std::initializer_list<std::string_view> known) {
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (auto k : known) ok = ok || k == key;
    if (!ok) fail(kv.first, "unknown key '" + key + "'");
  }
}

inline std::string get_string(const YAML::Node& n) {
  if (!n.IsScalar()) fail(n, "expected a scalar");
  return n.Scalar();
}

inline std::int64_t get_int(const YAML::Node& n) {
  try {
    if (!n.IsScalar()) fail(n, "expected an integer");
    return n.as<std::int64_t>();
  } catch (const YAML::BadConversion&) {
    fail(n, "expected an integer, got '" + n.Scalar() + "'");
  }
}

inline double get_double(const YAML::Node& n) {
  try {
    if (!n.IsScalar()) fail(n, "expected a number");
    return n.as<double>();
  } catch (const YAML::BadConversion&) {
    fail(n, "expected a number, got '" + n.Scalar() + "'");
  }
}

inline bool get_bool(const YAML::Node& n) {
  try {
    if (!n.IsScalar()) fail(n, "expected a boolean");
    return n.as<bool>();
  } catch (const YAML::BadConversion&) {
    fail(n, "expected a boolean, got '" + n.Scalar() + "'");
  }
}

}  // namespace qmap::yaml_support
