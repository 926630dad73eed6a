#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace tempme {

using NodeId = std::int32_t;
using EventId = std::int32_t;

struct Event {
  EventId id = 0;
  NodeId u = 0;
  NodeId v = 0;
  double t = 0.0;
  std::vector<double> attrs;

  NodeId other(NodeId x) const { return x == u ? v : u; }
  bool touches(NodeId x) const { return u == x || v == x; }
};

// Immutable event stream. Events are stored in non-decreasing time order and
// their ids equal their positions. Each node keeps its incident event ids in
// ascending (t, id) order, so time prefixes are found by binary search.
class TemporalGraph {
 public:
  TemporalGraph() = default;

  // Takes events in any order, sorts them stably by time and assigns dense ids.
  // Node ids must already be dense in [0, node_count).
  static TemporalGraph from_events(std::vector<Event> events, std::size_t node_count,
                                   std::size_t attr_width);

  std::size_t event_count() const { return events_.size(); }
  std::size_t node_count() const { return incident_.size(); }
  std::size_t attr_width() const { return attr_width_; }
  bool empty() const { return events_.empty(); }

  const Event& event(EventId id) const { return events_.at(static_cast<std::size_t>(id)); }
  const std::vector<Event>& events() const { return events_; }
  std::span<const EventId> incident(NodeId node) const;

  // Incident events of `node` with t < before (strict) or t <= before.
  std::span<const EventId> incident_before(NodeId node, double before, bool strict = true) const;

  std::size_t degree(NodeId node) const { return incident(node).size(); }
  std::size_t degree_before(NodeId node, double before) const {
    return incident_before(node, before, true).size();
  }

  // Number of events with t < before.
  std::size_t events_before(double before) const;

  double time_min() const { return events_.empty() ? 0.0 : events_.front().t; }
  double time_max() const { return events_.empty() ? 0.0 : events_.back().t; }
  double time_span() const { return time_max() - time_min(); }

  // Original labels of the dense node ids when the graph came from a CSV file.
  const std::vector<std::string>& node_labels() const { return labels_; }
  void set_node_labels(std::vector<std::string> labels) { labels_ = std::move(labels); }

  nlohmann::ordered_json to_json() const;
  static TemporalGraph from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static TemporalGraph load(const std::filesystem::path& path);

  friend bool operator==(const TemporalGraph& a, const TemporalGraph& b);

 private:
  std::vector<Event> events_;
  std::vector<std::vector<EventId>> incident_;
  std::vector<std::string> labels_;
  std::size_t attr_width_ = 0;
};

bool operator==(const Event& a, const Event& b);

struct IngestReport {
  std::size_t rows_read = 0;
  std::size_t self_loops_skipped = 0;
  std::vector<std::size_t> skipped_lines;
};

// Reads `u,v,t[,a_1..a_k]` rows. Node labels are remapped to dense ids in
// first-appearance order (after the stable time sort).
TemporalGraph ingest_csv(const std::filesystem::path& path, bool has_header,
                         IngestReport* report = nullptr);
TemporalGraph ingest_csv_text(const std::string& text, bool has_header,
                              IngestReport* report = nullptr);

// All events incident to any node of `nodes` that happen before `before`,
// ascending by id, without duplicates.
std::vector<EventId> neighbor_events(const TemporalGraph& g, std::span<const NodeId> nodes,
                                     double before, bool strict = true);

struct EventSubset {
  EventId target = -1;
  std::vector<EventId> members;  // ascending id
  std::map<EventId, int> hop_of;

  std::size_t size() const { return members.size(); }
  bool empty() const { return members.empty(); }
  bool contains(EventId id) const { return hop_of.count(id) != 0; }
};

inline constexpr int kDefaultPerHopCap = 20;

// L-hop historical neighbourhood of the query (u, v, t). A node reached via an
// event at time t' is expanded with its `per_hop_cap` most recent events before
// t'. The query itself is not required to be an event of `g`.
EventSubset computational_graph(const TemporalGraph& g, NodeId u, NodeId v, double t, int hops,
                                int per_hop_cap = kDefaultPerHopCap, EventId target = -1);
EventSubset computational_graph(const TemporalGraph& g, const Event& target, int hops,
                                int per_hop_cap = kDefaultPerHopCap);

enum class SyntheticRule { TriadicClosure, PreferentialAttachment, UniformRandom };

std::optional<SyntheticRule> parse_rule(const std::string& name);
std::string rule_name(SyntheticRule rule);

// Per-event provenance recorded by the generator. For wedge-closing events
// `wedge` holds the two earlier events (u-w, w-v) that the new event closes.
struct SyntheticTrace {
  std::vector<bool> closes_wedge;
  std::vector<std::pair<EventId, EventId>> wedge;
};

// Events are drawn one at a time with timestamps 1..n_events.
//  - triadic-closure: with probability 0.8 close an open wedge u-w-v formed by
//    two recent events, where u-v has not interacted within the recent window;
//    otherwise a uniform pair.
//  - preferential-attachment: both endpoints drawn with weight degree + 1.
//  - uniform-random: uniform pair.
TemporalGraph generate_synthetic(SyntheticRule rule, std::size_t n_nodes, std::size_t n_events,
                                 std::uint64_t seed, SyntheticTrace* trace = nullptr);

// Number of recent events the triadic generator draws wedges from.
std::size_t triadic_window(std::size_t n_nodes);

// Per-node incident event counts, sorted descending.
std::vector<std::size_t> degree_spectrum(const TemporalGraph& g);

}  // namespace tempme
