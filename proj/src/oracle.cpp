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

#include "qmap/oracle.hpp"

#include <algorithm>
#include <cerrno>
#include <cstring>
#include <nlohmann/json.hpp>
#include <poll.h>
#include <signal.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "qmap/log.hpp"

namespace qmap {

using nlohmann::json;

namespace {

std::string kind_label(OracleError::Kind k) {
  switch (k) {
    case OracleError::Kind::Timeout: return "timeout";
    case OracleError::Kind::Malformed: return "malformed response";
    case OracleError::Kind::Status: return "oracle error";
    case OracleError::Kind::Transport: return "transport failure";
  }
  return "oracle failure";
}

}  // namespace

OracleError::OracleError(Kind kind, std::string request_id, const std::string& what)
    : std::runtime_error("request " + request_id + ": " + kind_label(kind) + ": " + what),
      kind_(kind),
      request_id_(std::move(request_id)) {}

double surrogate_penalty(int bits) {
  const double k = kMaxGeneBits - bits;
  return 0.004 * k * (k + 1);
}

double surrogate_accuracy(const Genome& genome, const NetworkSpec& net) {
  const QuantConfig q = decode_genome(genome, net);
  std::int64_t total_macs = 0;
  for (const auto& layer : net.layers) total_macs += layer_macs(layer);
  double acc = kSurrogateBase;
  for (std::size_t i = 0; i < net.layers.size(); ++i) {
    const double w = static_cast<double>(layer_macs(net.layers[i])) / static_cast<double>(total_macs);
    acc -= w * (surrogate_penalty(q.layers[i].q_a) + surrogate_penalty(q.layers[i].q_w));
  }
  return std::clamp(acc, 0.0, 1.0);
}

double SurrogateOracle::accuracy(const Genome& genome, const std::string&) {
  return surrogate_accuracy(genome, net_);
}

std::string serialize_request(const AccuracyRequest& req) {
  return json{{"id", req.id}, {"network", req.network}, {"genome", req.genome.genes}, {"epochs", req.epochs}}
      .dump();
}

AccuracyResponse parse_response(const std::string& line, const std::string& expected_id) {
  auto malformed = [&](const std::string& why) {
    return OracleError(OracleError::Kind::Malformed, expected_id, why);
  };
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception&) {
    throw malformed("not JSON: " + line.substr(0, 200));
  }
  if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("status") ||
      !j["status"].is_string())
    throw malformed("record lacks string 'id' and 'status'");
  AccuracyResponse r;
  r.id = j["id"].get<std::string>();
  const auto status = j["status"].get<std::string>();
  if (status != "ok" && status != "error") throw malformed("unknown status '" + status + "'");
  r.ok = status == "ok";
  if (j.contains("message") && j["message"].is_string()) r.message = j["message"].get<std::string>();
  if (r.ok) {
    if (!j.contains("top1") || !j["top1"].is_number()) throw malformed("ok response without numeric 'top1'");
    r.top1 = j["top1"].get<double>();
    if (!(r.top1 >= 0.0 && r.top1 <= 1.0)) throw malformed("top1 outside [0, 1]");
  }
  return r;
}

ExternalOracleClient::ExternalOracleClient(OracleEndpoint endpoint) : endpoint_(std::move(endpoint)) {
  if (endpoint_.argv.empty()) throw std::invalid_argument("oracle command is empty");
}

ExternalOracleClient::~ExternalOracleClient() { stop(); }

void ExternalOracleClient::start() {
  int sv[2];
  // A socket rather than pipes so writes can pass MSG_NOSIGNAL instead of
  // touching the process-wide SIGPIPE disposition.
  if (::socketpair(AF_UNIX, SOCK_STREAM | SOCK_CLOEXEC, 0, sv) != 0)
    throw std::runtime_error(std::string("socketpair: ") + std::strerror(errno));
  std::vector<char*> argv;
  for (auto& a : endpoint_.argv) argv.push_back(a.data());
  argv.push_back(nullptr);

  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(sv[0]);
    ::close(sv[1]);
    throw std::runtime_error(std::string("fork: ") + std::strerror(errno));
  }
  if (pid == 0) {
    ::dup2(sv[1], STDIN_FILENO);
    ::dup2(sv[1], STDOUT_FILENO);
    ::execvp(argv[0], argv.data());
    ::_exit(127);
  }
  ::close(sv[1]);
  fd_ = sv[0];
  pid_ = pid;
  buffer_.clear();
}

void ExternalOracleClient::stop() {
  if (fd_ >= 0) {
    ::close(fd_);
    fd_ = -1;
  }
  if (pid_ > 0) {
    // Closing the stream asks the child to exit; give it a moment first.
    int status = 0;
    for (int i = 0; i < 20; ++i) {
      if (::waitpid(pid_, &status, WNOHANG) == pid_) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
    ::kill(pid_, SIGKILL);
    ::waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

AccuracyResponse ExternalOracleClient::exchange(const AccuracyRequest& req) {
  if (pid_ < 0) start();
  const std::string line = serialize_request(req) + "\n";
  std::size_t sent = 0;
  while (sent < line.size()) {
    const ssize_t n = ::send(fd_, line.data() + sent, line.size() - sent, MSG_NOSIGNAL);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportFailure{std::string("write: ") + std::strerror(errno)};
    }
    sent += static_cast<std::size_t>(n);
  }

  const auto deadline = std::chrono::steady_clock::now() + endpoint_.timeout;
  for (;;) {
    for (auto nl = buffer_.find('\n'); nl != std::string::npos; nl = buffer_.find('\n')) {
      std::string record = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (record.empty()) continue;
      // Peek at the id so leftovers from an abandoned request are skipped.
      const json j = json::parse(record, nullptr, false);
      if (j.is_object() && j.contains("id") && j["id"].is_string() &&
          j["id"].get<std::string>() != req.id) {
        ++stale_;
        log_warning("oracle response for stale id '" + j["id"].get<std::string>() + "' ignored (awaiting '" +
                    req.id + "')");
        continue;
      }
      return parse_response(record, req.id);
    }

    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) {
      // The child may still answer later; a fresh process avoids confusion.
      if (pid_ > 0) ::kill(pid_, SIGKILL);
      stop();
      throw OracleError(OracleError::Kind::Timeout, req.id,
                        "no response within " + std::to_string(endpoint_.timeout.count()) + " ms");
    }
    pollfd p{fd_, POLLIN, 0};
    const int ready = ::poll(&p, 1, static_cast<int>(std::min<std::int64_t>(left.count(), 1 << 30)));
    if (ready < 0) {
      if (errno == EINTR) continue;
      throw TransportFailure{std::string("poll: ") + std::strerror(errno)};
    }
    if (ready == 0) continue;
    char chunk[4096];
    const ssize_t n = ::recv(fd_, chunk, sizeof chunk, 0);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw TransportFailure{std::string("read: ") + std::strerror(errno)};
    }
    if (n == 0) throw TransportFailure{"oracle process closed its output"};
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

AccuracyResponse ExternalOracleClient::request(const AccuracyRequest& req) {
  try {
    return exchange(req);
  } catch (const TransportFailure& first) {
    log_warning("oracle request " + req.id + ": " + first.what + "; restarting oracle and retrying");
    stop();
    ++restarts_;
  }
  try {
    return exchange(req);
  } catch (const TransportFailure& second) {
    stop();
    throw OracleError(OracleError::Kind::Transport, req.id, second.what + " (after one retry)");
  }
}

OraclePool::OraclePool(const OracleEndpoint& endpoint, std::size_t size) : endpoint_(endpoint) {
  if (size == 0) throw std::invalid_argument("oracle pool size must be >= 1");
  for (std::size_t i = 0; i < size; ++i) {
    clients_.push_back(std::make_unique<ExternalOracleClient>(endpoint));
    idle_.push_back(size - 1 - i);
  }
}

double OraclePool::accuracy(const Genome& genome, const std::string& request_id) {
  std::size_t slot;
  {
    std::unique_lock lock(mu_);
    cv_.wait(lock, [&] { return !idle_.empty(); });
    slot = idle_.back();
    idle_.pop_back();
  }
  struct Release {
    OraclePool* pool;
    std::size_t slot;
    ~Release() {
      {
        std::lock_guard lock(pool->mu_);
        pool->idle_.push_back(slot);
      }
      pool->cv_.notify_one();
    }
  } release{this, slot};

  const AccuracyResponse r =
      clients_[slot]->request({request_id, endpoint_.network, genome, endpoint_.epochs});
  if (!r.ok)
    throw OracleError(OracleError::Kind::Status, request_id, r.message.empty() ? "status error" : r.message);
  return r.top1;
}

std::string OraclePool::describe() const {
  std::string cmd;
  for (const auto& a : endpoint_.argv) cmd += (cmd.empty() ? "" : " ") + a;
  return "external(" + cmd + ") x" + std::to_string(clients_.size());
}

}  // namespace qmap
