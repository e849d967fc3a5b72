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

// Scriptable stand-in for an accuracy oracle process. Reads one JSON request
// per line on stdin and answers on stdout according to argv[1]:
//   constant V        top1 = V
//   genome            top1 = 0.9 * mean(genes) / 8
//   hang              never answers
//   die               exits on every request without answering
//   die-once FILE     exits on the first request ever (FILE marks it), then
//                     behaves like `genome`
//   stale             sends a reply for another id first, then the real one
//   error             status "error"
//   garbage           a line that is not JSON
//   bad-range         top1 = 1.5
//   slow MS           like `genome` after sleeping MS milliseconds

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <string>
#include <thread>

using nlohmann::json;

namespace {

double genome_score(const json& req) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& g : req.at("genome")) {
    sum += g.get<double>();
    ++n;
  }
  return n ? 0.9 * sum / (8.0 * static_cast<double>(n)) : 0.0;
}

void reply(const json& j) { std::cout << j.dump() << '\n' << std::flush; }

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: fake_oracle MODE [ARG]\n";
    return 2;
  }
  const std::string mode = argv[1];
  const std::string arg = argc > 2 ? argv[2] : "";

  std::string line;
  while (std::getline(std::cin, line)) {
    const json req = json::parse(line);
    const std::string id = req.at("id").get<std::string>();

    if (mode == "hang") {
      std::this_thread::sleep_for(std::chrono::hours(1));
    } else if (mode == "die") {
      return 3;
    } else if (mode == "die-once") {
      if (!std::filesystem::exists(arg)) {
        std::ofstream(arg) << "died\n";
        return 3;
      }
      reply({{"id", id}, {"status", "ok"}, {"top1", genome_score(req)}});
    } else if (mode == "constant") {
      reply({{"id", id}, {"status", "ok"}, {"top1", std::stod(arg)}});
    } else if (mode == "genome") {
      reply({{"id", id}, {"status", "ok"}, {"top1", genome_score(req)}});
    } else if (mode == "stale") {
      reply({{"id", "old-" + id}, {"status", "ok"}, {"top1", 0.01}});
      reply({{"id", id}, {"status", "ok"}, {"top1", genome_score(req)}});
    } else if (mode == "error") {
      reply({{"id", id}, {"status", "error"}, {"message", "training diverged"}});
    } else if (mode == "garbage") {
      std::cout << "this is not json\n" << std::flush;
    } else if (mode == "bad-range") {
      reply({{"id", id}, {"status", "ok"}, {"top1", 1.5}});
    } else if (mode == "slow") {
      std::this_thread::sleep_for(std::chrono::milliseconds(std::atoi(arg.c_str())));
      reply({{"id", id}, {"status", "ok"}, {"top1", genome_score(req)}});
    } else {
      std::cerr << "fake_oracle: unknown mode " << mode << '\n';
      return 2;
    }
  }
  return 0;
}
