#pragma once

#include <mutex>
#include <string>
#include <vector>

#include "tempme/base_model.hpp"

namespace tempme {

inline constexpr const char* kAdapterProtocol = "tempme-adapter/1";

struct AdapterConfig {
  std::vector<std::string> argv;  // executable and its arguments
  double timeout_seconds = 5.0;
  int hops = 1;
  int per_hop_cap = kDefaultPerHopCap;
};

// A black-box predictor running as a child process. Requests and responses are
// newline-delimited JSON on the child's stdin/stdout; calls are serialized.
// An unmasked query sends the whole computational graph as `retained`.
class ExternalAdapter : public Predictor {
 public:
  explicit ExternalAdapter(AdapterConfig cfg);
  ~ExternalAdapter() override;
  ExternalAdapter(const ExternalAdapter&) = delete;
  ExternalAdapter& operator=(const ExternalAdapter&) = delete;

  double predict(const TemporalGraph& g, const PredictionQuery& q) const override;
  EventSubset context(const TemporalGraph& g, NodeId u, NodeId v, double t) const override;

 private:
  std::string read_line() const;
  void write_line(const std::string& line) const;
  void shutdown();

  AdapterConfig cfg_;
  int pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  mutable std::string buffer_;
  mutable long next_id_ = 0;
  mutable std::mutex mu_;
};

}  // namespace tempme
