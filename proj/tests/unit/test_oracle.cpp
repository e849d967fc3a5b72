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

#include <chrono>
#include <nlohmann/json.hpp>
#include <thread>

#include "catch_amalgamated.hpp"
#include "fixtures.hpp"
#include "qmap/oracle.hpp"

using namespace qmap;
using namespace qmap::testing;
using Clock = std::chrono::steady_clock;

namespace {

OracleEndpoint fake(std::vector<std::string> args, int timeout_ms = 5000) {
  OracleEndpoint ep;
  ep.argv = {QMAP_FAKE_ORACLE};
  for (auto& a : args) ep.argv.push_back(std::move(a));
  ep.timeout = std::chrono::milliseconds(timeout_ms);
  ep.network = "toy";
  ep.epochs = 0;
  return ep;
}

AccuracyRequest request(const std::string& id, Genome g = Genome::uniform(2, 8)) {
  return {id, "toy", std::move(g), 0};
}

OracleError::Kind error_kind(ExternalOracleClient& c, const AccuracyRequest& r) {
  try {
    c.request(r);
  } catch (const OracleError& e) {
    CHECK(e.request_id() == r.id);
    return e.kind();
  }
  FAIL("expected an OracleError");
  return OracleError::Kind::Transport;
}

NetworkSpec two_layer_net() {
  NetworkSpec net{"two", {make_layer(LayerKind::Standard, 1, 8, 3, 4, 4, 3, 3), make_layer(LayerKind::Standard, 1, 4, 8, 4, 4, 1, 1)}};
  net.layers[0].name = "a";
  net.layers[1].name = "b";
  return net;
}

}  // namespace

TEST_CASE("surrogate accuracy") {
  const auto net = two_layer_net();
  CHECK(surrogate_accuracy(Genome::uniform(2, 8), net) == kSurrogateBase);
  const double u2 = surrogate_accuracy(Genome::uniform(2, 2), net);
  for (int b = 3; b <= 8; ++b) CHECK(u2 < surrogate_accuracy(Genome::uniform(2, b), net));
  CHECK(surrogate_penalty(8) == 0.0);
  for (int b = 2; b < 8; ++b) CHECK(surrogate_penalty(b) > surrogate_penalty(b + 1));

  // Lowering any single gene never raises the estimate, over all 7^4 genomes.
  Genome g = Genome::uniform(2, 2);
  int checked = 0;
  for (int a = 2; a <= 8; ++a)
    for (int b = 2; b <= 8; ++b)
      for (int c = 2; c <= 8; ++c)
        for (int d = 2; d <= 8; ++d) {
          g.genes = {a, b, c, d};
          const double base = surrogate_accuracy(g, net);
          CHECK(base >= 0.0);
          CHECK(base <= 1.0);
          for (std::size_t k = 0; k < 4; ++k) {
            if (g.genes[k] == 2) continue;
            Genome lower = g;
            --lower.genes[k];
            CHECK(surrogate_accuracy(lower, net) <= base);
            ++checked;
          }
        }
  CHECK(checked == 4 * 6 * 7 * 7 * 7);

  SurrogateOracle oracle(net);
  CHECK(oracle.accuracy(Genome::uniform(2, 8), "x") == kSurrogateBase);
}

TEST_CASE("protocol records") {
  const auto line = serialize_request({"g1-i2", "toy", Genome{{4, 6}}, 3});
  const auto j = nlohmann::json::parse(line);
  CHECK(j.at("id") == "g1-i2");
  CHECK(j.at("network") == "toy");
  CHECK(j.at("genome") == nlohmann::json::array({4, 6}));
  CHECK(j.at("epochs") == 3);
  CHECK(line.find('\n') == std::string::npos);

  const auto ok = parse_response(R"({"id":"a","status":"ok","top1":0.25})", "a");
  CHECK(ok.ok);
  CHECK(ok.top1 == 0.25);
  const auto err = parse_response(R"({"id":"a","status":"error","message":"nope"})", "a");
  CHECK_FALSE(err.ok);
  CHECK(err.message == "nope");
  for (const char* bad : {"", "[1]", R"({"id":"a"})", R"({"id":"a","status":"maybe"})",
                          R"({"id":"a","status":"ok"})", R"({"id":"a","status":"ok","top1":"high"})",
                          R"({"id":"a","status":"ok","top1":-0.1})", R"({"id":7,"status":"ok","top1":0.1})"}) {
    try {
      parse_response(bad, "a");
      FAIL("accepted: " << bad);
    } catch (const OracleError& e) {
      CHECK(e.kind() == OracleError::Kind::Malformed);
      CHECK(e.request_id() == "a");
    }
  }
}

TEST_CASE("echo oracle") {
  ExternalOracleClient client(fake({"constant", "0.5"}));
  for (int i = 0; i < 5; ++i) {
    const auto r = client.request(request("r" + std::to_string(i)));
    CHECK(r.ok);
    CHECK(r.id == "r" + std::to_string(i));
    CHECK(r.top1 == 0.5);
  }
  CHECK(client.restarts() == 0);
}

TEST_CASE("a hung oracle times out after the configured interval") {
  ExternalOracleClient client(fake({"hang"}, 300));
  const auto t0 = Clock::now();
  CHECK(error_kind(client, request("h1")) == OracleError::Kind::Timeout);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
  CHECK(ms >= 300);
  CHECK(ms < 3000);
}

TEST_CASE("stale responses are skipped") {
  ExternalOracleClient client(fake({"stale"}));
  const auto r = client.request(request("s1", Genome::uniform(2, 4)));
  CHECK(r.ok);
  CHECK(r.top1 == Catch::Approx(0.45));
  CHECK(client.stale_responses() == 1);
}

TEST_CASE("a process that dies is restarted once") {
  TempDir dir;
  const auto marker = (dir.path() / "died").string();
  ExternalOracleClient client(fake({"die-once", marker}));
  const int first_pid = client.pid();
  const auto r = client.request(request("d1"));
  CHECK(r.ok);
  CHECK(r.id == "d1");
  CHECK(client.restarts() == 1);
  CHECK(client.pid() != first_pid);

  // Dying every time is reported promptly, without waiting for the timeout.
  ExternalOracleClient always(fake({"die"}, 60000));
  const auto t0 = Clock::now();
  CHECK(error_kind(always, request("d2")) == OracleError::Kind::Transport);
  CHECK(Clock::now() - t0 < std::chrono::seconds(10));
}

TEST_CASE("error statuses and malformed replies") {
  ExternalOracleClient err(fake({"error"}));
  const auto r = err.request(request("e1"));
  CHECK_FALSE(r.ok);
  CHECK(r.message == "training diverged");

  ExternalOracleClient garbage(fake({"garbage"}));
  CHECK(error_kind(garbage, request("e2")) == OracleError::Kind::Malformed);
  ExternalOracleClient range(fake({"bad-range"}));
  CHECK(error_kind(range, request("e3")) == OracleError::Kind::Malformed);

  ExternalOracleClient missing(OracleEndpoint{{"/nonexistent/qmap-oracle"}, std::chrono::milliseconds(2000), "toy", 0});
  CHECK(error_kind(missing, request("e4")) == OracleError::Kind::Transport);
}

TEST_CASE("pool serves concurrent callers") {
  OraclePool pool(fake({"slow", "50"}), 2);
  std::vector<double> got(6, -1.0);
  std::vector<std::thread> threads;
  for (std::size_t i = 0; i < got.size(); ++i)
    threads.emplace_back([&, i] {
      got[i] = pool.accuracy(Genome::uniform(2, static_cast<int>(2 + i)), "p" + std::to_string(i));
    });
  for (auto& t : threads) t.join();
  for (std::size_t i = 0; i < got.size(); ++i) CHECK(got[i] == Catch::Approx(0.9 * static_cast<double>(2 + i) / 8.0));

  OraclePool failing(fake({"error"}), 1);
  try {
    failing.accuracy(Genome::uniform(2, 8), "p9");
    FAIL("expected a status error");
  } catch (const OracleError& e) {
    CHECK(e.kind() == OracleError::Kind::Status);
  }
}
