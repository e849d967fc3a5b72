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

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "qmap/workload.hpp"

namespace qmap {

struct AccuracyRequest {
  std::string id;
  std::string network;
  Genome genome;
  int epochs = 0;
};

struct AccuracyResponse {
  std::string id;
  bool ok = false;
  double top1 = 0.0;  // fraction in [0, 1]; meaningful only when ok
  std::string message;
};

class OracleError : public std::runtime_error {
 public:
  enum class Kind { Timeout, Malformed, Status, Transport };
  OracleError(Kind kind, std::string request_id, const std::string& what);
  Kind kind() const { return kind_; }
  const std::string& request_id() const { return request_id_; }

 private:
  Kind kind_;
  std::string request_id_;
};

// Accuracy source for the search. Implementations must be safe to call from
// several threads at once.
class AccuracyOracle {
 public:
  virtual ~AccuracyOracle() = default;
  // Top-1 accuracy as a fraction. Throws OracleError on failure.
  virtual double accuracy(const Genome& genome, const std::string& request_id) = 0;
  virtual std::string describe() const = 0;
};

inline constexpr double kSurrogateBase = 0.77;

// Zero at 8 bits and growing as bits shrink.
double surrogate_penalty(int bits);

// base - sum_i w_i * (penalty(q_a[i]) + penalty(q_w[i])), w_i the layer's
// share of total MACs, clamped to [0, 1].
double surrogate_accuracy(const Genome& genome, const NetworkSpec& net);

class SurrogateOracle : public AccuracyOracle {
 public:
  explicit SurrogateOracle(NetworkSpec net) : net_(std::move(net)) {}
  double accuracy(const Genome& genome, const std::string& request_id) override;
  std::string describe() const override { return "surrogate"; }

 private:
  NetworkSpec net_;
};

struct OracleEndpoint {
  std::vector<std::string> argv;  // argv[0] is looked up on PATH
  std::chrono::milliseconds timeout{60000};
  std::string network;
  int epochs = 5;
};

std::string serialize_request(const AccuracyRequest& req);
// Throws OracleError(Malformed) naming `expected_id` when the line is not a
// well-formed response record.
AccuracyResponse parse_response(const std::string& line, const std::string& expected_id);

// One child process spoken to with newline-delimited JSON over its standard
// streams. One request in flight at a time.
class ExternalOracleClient {
 public:
  explicit ExternalOracleClient(OracleEndpoint endpoint);
  ~ExternalOracleClient();
  ExternalOracleClient(const ExternalOracleClient&) = delete;
  ExternalOracleClient& operator=(const ExternalOracleClient&) = delete;

  // Retries once, with the same id, if the process dies or the stream
  // breaks. Timeouts, error statuses and malformed records are not retried.
  AccuracyResponse request(const AccuracyRequest& req);

  int pid() const { return pid_; }
  std::int64_t stale_responses() const { return stale_; }
  std::int64_t restarts() const { return restarts_; }

 private:
  struct TransportFailure {
    std::string what;
  };

  void start();
  void stop();
  AccuracyResponse exchange(const AccuracyRequest& req);  // may throw TransportFailure

  OracleEndpoint endpoint_;
  int pid_ = -1;
  int fd_ = -1;
  std::string buffer_;
  std::int64_t stale_ = 0;
  std::int64_t restarts_ = 0;
};

// N clients handed out to concurrent callers.
class OraclePool : public AccuracyOracle {
 public:
  OraclePool(const OracleEndpoint& endpoint, std::size_t size);
  double accuracy(const Genome& genome, const std::string& request_id) override;
  std::string describe() const override;

 private:
  OracleEndpoint endpoint_;
  std::vector<std::unique_ptr<ExternalOracleClient>> clients_;
  std::vector<std::size_t> idle_;
  std::mutex mu_;
  std::condition_variable cv_;
};

}  // namespace qmap
