#pragma once

#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "tempme/graph.hpp"

namespace tempme {

// Shape of a retrospective temporal motif: at most `max_nodes` nodes, `length`
// events, and all events within `delta` of the anchor time.
struct MotifParams {
  int max_nodes = 3;
  int length = 3;
  double delta = std::numeric_limits<double>::infinity();
};

// An event sequence anchored at (anchor, anchor_time) whose timestamps strictly
// decrease. Every prefix induces a connected subgraph. A trajectory that ran
// out of admissible events before reaching the requested length is kept with
// `truncated` set.
struct MotifInstance {
  NodeId anchor = -1;
  double anchor_time = 0.0;
  std::vector<EventId> events;
  bool truncated = false;

  std::size_t length() const { return events.size(); }
  // Nodes in first-touch order; the anchor comes first.
  std::vector<NodeId> nodes(const TemporalGraph& g) const;

  friend bool operator==(const MotifInstance&, const MotifInstance&) = default;
  friend auto operator<=>(const MotifInstance& a, const MotifInstance& b) {
    return a.events <=> b.events;
  }
};

// Canonical 2l-digit label: one digit pair per event, nodes numbered by first
// touch with the anchor as 0.
struct MotifCode {
  std::vector<std::uint8_t> digits;

  std::size_t length() const { return digits.size() / 2; }
  std::string str() const;
  static MotifCode parse(const std::string& s);

  friend bool operator==(const MotifCode&, const MotifCode&) = default;
  friend auto operator<=>(const MotifCode&, const MotifCode&) = default;
};

MotifCode motif_code(const TemporalGraph& g, const MotifInstance& inst);

// Checks every structural invariant of a motif instance. Returns an empty
// string when valid, otherwise the first violation found.
std::string validate_instance(const TemporalGraph& g, const MotifInstance& inst,
                              const MotifParams& params);

// C sequential-uniform trajectories (the retrospective sampling walk). Each
// trajectory draws from its own stream keyed by (seed, anchor, index).
std::vector<MotifInstance> sample_motifs(const TemporalGraph& g, NodeId anchor, double anchor_time,
                                         const MotifParams& params, int count, std::uint64_t seed);

// Tree-structured sampling. `fanout` has one entry per branching stage: length
// `l` when max_nodes >= l + 1, otherwise max_nodes - 1 followed by single-draw
// completion steps. Produces prod(fanout) instances.
std::vector<MotifInstance> sample_motifs_tree(const TemporalGraph& g, NodeId anchor,
                                              double anchor_time, const MotifParams& params,
                                              std::span<const int> fanout, std::uint64_t seed);

inline constexpr std::size_t kEnumerationEventLimit = 200;

// Every instance the samplers can emit (full-length ones and dead-end
// prefixes), each exactly once, in lexicographic event-id order.
std::vector<MotifInstance> enumerate_motifs(const TemporalGraph& g, NodeId anchor,
                                            double anchor_time, const MotifParams& params,
                                            std::size_t event_limit = kEnumerationEventLimit);

// Admissible extensions of a partial instance, ascending id.
std::vector<EventId> admissible_events(const TemporalGraph& g, const MotifInstance& partial,
                                       const MotifParams& params);

// All codes reachable with at most `max_nodes` nodes and 1..length events.
std::vector<MotifCode> motif_alphabet(int max_nodes, int length);

struct MotifCensus {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  std::size_t truncated = 0;

  bool defined() const { return total > 0; }
  double prob(const std::string& code) const;
  std::map<std::string, double> probs() const;
  nlohmann::ordered_json to_json() const;
};

MotifCensus census(const TemporalGraph& g, std::span<const MotifInstance> instances);

// Time-shuffled null model: timestamps permuted uniformly, endpoints kept.
TemporalGraph null_model(const TemporalGraph& g, std::uint64_t seed);

// Samples `per_node` motifs anchored at every active node (anchor time just
// after its last incident event) and pools them into one census.
MotifCensus node_census(const TemporalGraph& g, const MotifParams& params, int per_node,
                        std::uint64_t seed);

inline constexpr double kDefaultSmoothing = 1e-6;

// Smoothed class probabilities of the null model over the full alphabet.
std::map<std::string, double> smoothed_probs(const MotifCensus& c, int max_nodes, int length,
                                             double smoothing);
std::map<std::string, double> null_class_probs(const TemporalGraph& g, const MotifParams& params,
                                               int per_node, std::uint64_t seed,
                                               double smoothing = kDefaultSmoothing);

double total_variation(const std::map<std::string, double>& a,
                       const std::map<std::string, double>& b);

}  // namespace tempme
