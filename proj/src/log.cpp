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

#include "qmap/log.hpp"

#include <atomic>
#include <iostream>
#include <mutex>

namespace qmap {

namespace {
std::mutex g_log_mu;
std::atomic<bool> g_quiet{false};
}  // namespace

void log_warning(const std::string& msg) {
  if (g_quiet.load(std::memory_order_relaxed)) return;
  std::lock_guard lock(g_log_mu);
  std::cerr << "qmap: warning: " << msg << '\n';
}

void set_quiet(bool quiet) { g_quiet.store(quiet); }

}  // namespace qmap
