#include "tempme/adapter.hpp"

#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>

#include "tempme/error.hpp"

namespace tempme {

ExternalAdapter::ExternalAdapter(AdapterConfig cfg) : cfg_(std::move(cfg)) {
  if (cfg_.argv.empty()) throw ConfigError("adapter: empty command");
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0) throw ProtocolError(std::string("adapter: pipe failed: ") + std::strerror(errno));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    throw ProtocolError(std::string("adapter: pipe failed: ") + std::strerror(errno));
  }
  std::vector<char*> args;
  for (auto& a : cfg_.argv) args.push_back(a.data());
  args.push_back(nullptr);

  pid_ = fork();
  if (pid_ < 0) throw ProtocolError(std::string("adapter: fork failed: ") + std::strerror(errno));
  if (pid_ == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execvp(args[0], args.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  signal(SIGPIPE, SIG_IGN);

  try {
    const auto hello = nlohmann::json::parse(read_line());
    if (!hello.is_object() || hello.value("protocol", "") != kAdapterProtocol) {
      throw ProtocolError("adapter: unexpected handshake " + hello.dump());
    }
  } catch (const nlohmann::json::exception& e) {
    shutdown();
    throw ProtocolError(std::string("adapter: malformed handshake: ") + e.what());
  } catch (...) {
    shutdown();
    throw;
  }
}

ExternalAdapter::~ExternalAdapter() { shutdown(); }

void ExternalAdapter::shutdown() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  to_child_ = from_child_ = -1;
  if (pid_ > 0) {
    int status = 0;
    if (waitpid(pid_, &status, WNOHANG) == 0) {
      kill(pid_, SIGTERM);
      waitpid(pid_, &status, 0);
    }
    pid_ = -1;
  }
}

std::string ExternalAdapter::read_line() const {
  using clock = std::chrono::steady_clock;
  const auto deadline = clock::now() + std::chrono::duration<double>(cfg_.timeout_seconds);
  for (;;) {
    auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now());
    if (left.count() <= 0) throw ProtocolError("adapter: timed out waiting for a response");
    pollfd p{from_child_, POLLIN, 0};
    const int r = poll(&p, 1, static_cast<int>(left.count()));
    if (r < 0 && errno == EINTR) continue;
    if (r < 0) throw ProtocolError(std::string("adapter: poll failed: ") + std::strerror(errno));
    if (r == 0) throw ProtocolError("adapter: timed out waiting for a response");
    char chunk[4096];
    const ssize_t n = read(from_child_, chunk, sizeof chunk);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw ProtocolError("adapter: child closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(n));
  }
}

void ExternalAdapter::write_line(const std::string& line) const {
  std::string data = line + "\n";
  const char* p = data.data();
  std::size_t left = data.size();
  while (left > 0) {
    const ssize_t n = write(to_child_, p, left);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) throw ProtocolError("adapter: write to child failed");
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

EventSubset ExternalAdapter::context(const TemporalGraph& g, NodeId u, NodeId v, double t) const {
  return computational_graph(g, u, v, t, cfg_.hops, cfg_.per_hop_cap);
}

double ExternalAdapter::predict(const TemporalGraph& g, const PredictionQuery& q) const {
  std::vector<EventId> retained = q.retained ? *q.retained : context(g, q.u, q.v, q.t).members;
  std::sort(retained.begin(), retained.end());
  std::lock_guard lock(mu_);
  const long id = next_id_++;
  nlohmann::ordered_json req{{"id", id}, {"u", q.u}, {"v", q.v}, {"t", q.t}, {"retained", retained}};
  write_line(req.dump());
  nlohmann::json resp;
  try {
    resp = nlohmann::json::parse(read_line());
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("adapter: malformed response: ") + e.what());
  }
  if (!resp.is_object() || !resp.contains("id") || !resp.contains("p") ||
      !resp["id"].is_number_integer() || !resp["p"].is_number()) {
    throw ProtocolError("adapter: malformed response " + resp.dump());
  }
  if (resp["id"].get<long>() != id) throw ProtocolError("adapter: response id mismatch");
  const double p = resp["p"].get<double>();
  if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
    throw ProtocolError("adapter: probability " + resp["p"].dump() + " outside [0, 1]");
  }
  return p;
}

}  // namespace tempme
