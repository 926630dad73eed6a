#include "tempme/motif.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tempme/error.hpp"
#include "tempme/random.hpp"

namespace tempme {

namespace {

void check_params(const MotifParams& p) {
  if (p.length < 1) throw ConfigError("motif length must be >= 1");
  if (p.max_nodes < 2) throw ConfigError("motif max_nodes must be >= 2");
  if (p.max_nodes > 10) throw ConfigError("motif max_nodes must be <= 10 (single-digit labels)");
  if (!(p.delta > 0.0)) throw ConfigError("motif delta must be > 0");
}

// Small node set kept in first-touch order.
struct NodeSet {
  std::vector<NodeId> nodes;
  bool contains(NodeId n) const { return std::find(nodes.begin(), nodes.end(), n) != nodes.end(); }
  void add(NodeId n) {
    if (!contains(n)) nodes.push_back(n);
  }
};

NodeSet node_set_of(const TemporalGraph& g, const MotifInstance& inst) {
  NodeSet s;
  s.add(inst.anchor);
  for (EventId id : inst.events) {
    const Event& e = g.event(id);
    s.add(e.u);
    s.add(e.v);
  }
  return s;
}

void collect_admissible(const TemporalGraph& g, const NodeSet& s, double before, double anchor_time,
                        const MotifParams& p, std::vector<EventId>& out) {
  out.clear();
  const double earliest = anchor_time - p.delta;
  const bool full = static_cast<int>(s.nodes.size()) >= p.max_nodes;
  for (NodeId n : s.nodes) {
    auto prefix = g.incident_before(n, before, true);
    // walk backwards from the most recent event and stop once outside delta
    for (auto it = prefix.rbegin(); it != prefix.rend(); ++it) {
      const Event& e = g.event(*it);
      if (e.t < earliest) break;
      if (full && !s.contains(e.other(n))) continue;
      out.push_back(e.id);
    }
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
}

// Extends `inst` in place with one uniform draw per step until it reaches
// `target_len` or dead-ends.
void extend_sequential(const TemporalGraph& g, MotifInstance& inst, NodeSet& s,
                       const MotifParams& p, std::size_t target_len, SplitMix64& rng,
                       std::vector<EventId>& scratch) {
  while (inst.events.size() < target_len) {
    const double before = inst.events.empty() ? inst.anchor_time : g.event(inst.events.back()).t;
    collect_admissible(g, s, before, inst.anchor_time, p, scratch);
    if (scratch.empty()) {
      inst.truncated = true;
      return;
    }
    const EventId pick = scratch[uniform_index(rng, scratch.size())];
    const Event& e = g.event(pick);
    inst.events.push_back(pick);
    s.add(e.u);
    s.add(e.v);
  }
}

}  // namespace

std::vector<NodeId> MotifInstance::nodes(const TemporalGraph& g) const {
  return node_set_of(g, *this).nodes;
}

std::string MotifCode::str() const {
  std::string s;
  s.reserve(digits.size());
  for (auto d : digits) s.push_back(static_cast<char>('0' + d));
  return s;
}

MotifCode MotifCode::parse(const std::string& s) {
  if (s.size() % 2 != 0) throw SchemaError("motif code must have an even number of digits: " + s);
  MotifCode c;
  for (char ch : s) {
    if (ch < '0' || ch > '9') throw SchemaError("motif code has a non-digit: " + s);
    c.digits.push_back(static_cast<std::uint8_t>(ch - '0'));
  }
  return c;
}

MotifCode motif_code(const TemporalGraph& g, const MotifInstance& inst) {
  std::vector<std::pair<NodeId, std::uint8_t>> label;
  auto label_of = [&](NodeId n) -> int {
    for (const auto& [node, l] : label) {
      if (node == n) return l;
    }
    return -1;
  };
  auto assign = [&](NodeId n) {
    int l = label_of(n);
    if (l < 0) {
      l = static_cast<int>(label.size());
      label.emplace_back(n, static_cast<std::uint8_t>(l));
    }
    return l;
  };
  assign(inst.anchor);
  MotifCode code;
  code.digits.reserve(inst.events.size() * 2);
  for (EventId id : inst.events) {
    const Event& e = g.event(id);
    // Label the already-known endpoint first so a fresh node gets the next label.
    NodeId first = e.u, second = e.v;
    if (label_of(first) < 0 && label_of(second) >= 0) std::swap(first, second);
    const int a = assign(first);
    const int b = assign(second);
    code.digits.push_back(static_cast<std::uint8_t>(std::min(a, b)));
    code.digits.push_back(static_cast<std::uint8_t>(std::max(a, b)));
  }
  return code;
}

std::string validate_instance(const TemporalGraph& g, const MotifInstance& inst,
                              const MotifParams& p) {
  if (inst.events.empty()) return "instance has no events";
  if (static_cast<int>(inst.events.size()) > p.length) return "instance longer than l";
  if (!inst.truncated && static_cast<int>(inst.events.size()) != p.length) {
    return "non-truncated instance shorter than l";
  }
  NodeSet s;
  s.add(inst.anchor);
  double prev = inst.anchor_time;
  for (std::size_t j = 0; j < inst.events.size(); ++j) {
    const EventId id = inst.events[j];
    if (id < 0 || static_cast<std::size_t>(id) >= g.event_count()) return "event id out of range";
    const Event& e = g.event(id);
    if (!(e.t < prev)) return "timestamps not strictly decreasing at position " + std::to_string(j);
    if (inst.anchor_time - e.t > p.delta) return "event outside delta window";
    if (j == 0 && !e.touches(inst.anchor)) return "first event not incident to the anchor";
    if (!s.contains(e.u) && !s.contains(e.v)) return "prefix disconnected at position " + std::to_string(j);
    s.add(e.u);
    s.add(e.v);
    if (static_cast<int>(s.nodes.size()) > p.max_nodes) return "too many nodes";
    prev = e.t;
  }
  return {};
}

std::vector<EventId> admissible_events(const TemporalGraph& g, const MotifInstance& partial,
                                       const MotifParams& params) {
  check_params(params);
  std::vector<EventId> out;
  const double before =
      partial.events.empty() ? partial.anchor_time : g.event(partial.events.back()).t;
  collect_admissible(g, node_set_of(g, partial), before, partial.anchor_time, params, out);
  return out;
}

std::vector<MotifInstance> sample_motifs(const TemporalGraph& g, NodeId anchor, double anchor_time,
                                         const MotifParams& params, int count, std::uint64_t seed) {
  check_params(params);
  if (count < 1) throw ConfigError("sample_motifs: C must be >= 1");
  std::vector<MotifInstance> out;
  if (g.incident_before(anchor, anchor_time, true).empty()) return out;
  out.reserve(static_cast<std::size_t>(count));
  std::vector<EventId> scratch;
  for (int c = 0; c < count; ++c) {
    SplitMix64 rng(derive_seed(seed, {static_cast<std::uint64_t>(anchor),
                                      static_cast<std::uint64_t>(c)}));
    MotifInstance inst;
    inst.anchor = anchor;
    inst.anchor_time = anchor_time;
    NodeSet s;
    s.add(anchor);
    extend_sequential(g, inst, s, params, static_cast<std::size_t>(params.length), rng, scratch);
    if (inst.events.empty()) return {};  // nothing within delta
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<MotifInstance> sample_motifs_tree(const TemporalGraph& g, NodeId anchor,
                                              double anchor_time, const MotifParams& params,
                                              std::span<const int> fanout, std::uint64_t seed) {
  check_params(params);
  const int stages = params.max_nodes >= params.length + 1 ? params.length : params.max_nodes - 1;
  if (static_cast<int>(fanout.size()) != stages) {
    throw ConfigError("sample_motifs_tree: fanout needs " + std::to_string(stages) + " entries");
  }
  std::size_t leaves = 1;
  for (int k : fanout) {
    if (k < 1) throw ConfigError("sample_motifs_tree: fanout entries must be >= 1");
    leaves *= static_cast<std::size_t>(k);
  }
  std::vector<MotifInstance> out;
  if (g.incident_before(anchor, anchor_time, true).empty()) return out;
  out.reserve(leaves);

  struct Branch {
    MotifInstance inst;
    NodeSet nodes;
    std::uint64_t path;
    std::size_t multiplicity;  // leaves this branch stands for once it dead-ends
  };
  MotifInstance root;
  root.anchor = anchor;
  root.anchor_time = anchor_time;
  NodeSet root_nodes;
  root_nodes.add(anchor);
  std::vector<Branch> level{{root, root_nodes, 1, leaves}};
  std::vector<EventId> scratch;

  for (std::size_t stage = 0; stage < fanout.size(); ++stage) {
    const auto k = static_cast<std::size_t>(fanout[stage]);
    std::vector<Branch> next;
    for (auto& b : level) {
      if (b.inst.truncated) {
        next.push_back(std::move(b));
        continue;
      }
      const double before =
          b.inst.events.empty() ? anchor_time : g.event(b.inst.events.back()).t;
      collect_admissible(g, b.nodes, before, anchor_time, params, scratch);
      if (scratch.empty()) {
        b.inst.truncated = true;
        next.push_back(std::move(b));
        continue;
      }
      for (std::size_t child = 0; child < k; ++child) {
        SplitMix64 rng(derive_seed(seed, {static_cast<std::uint64_t>(anchor), b.path, child}));
        Branch c = b;
        c.path = b.path * 1000003ULL + child + 1;
        c.multiplicity = b.multiplicity / k;
        const EventId pick = scratch[uniform_index(rng, scratch.size())];
        c.inst.events.push_back(pick);
        c.nodes.add(g.event(pick).u);
        c.nodes.add(g.event(pick).v);
        next.push_back(std::move(c));
      }
    }
    level = std::move(next);
  }

  for (auto& b : level) {
    if (b.inst.events.empty()) return {};  // nothing within delta
    if (!b.inst.truncated) {
      SplitMix64 rng(derive_seed(seed, {static_cast<std::uint64_t>(anchor), b.path, 0xc0u}));
      extend_sequential(g, b.inst, b.nodes, params, static_cast<std::size_t>(params.length), rng,
                        scratch);
    }
    for (std::size_t m = 0; m < b.multiplicity; ++m) out.push_back(b.inst);
  }
  return out;
}

std::vector<MotifInstance> enumerate_motifs(const TemporalGraph& g, NodeId anchor,
                                            double anchor_time, const MotifParams& params,
                                            std::size_t event_limit) {
  check_params(params);
  const std::size_t visible = g.events_before(anchor_time);
  if (visible > event_limit) {
    throw RefusalError("enumerate_motifs: " + std::to_string(visible) +
                       " events before anchor time exceed the limit of " +
                       std::to_string(event_limit));
  }
  std::vector<MotifInstance> out;
  MotifInstance cur;
  cur.anchor = anchor;
  cur.anchor_time = anchor_time;

  auto recurse = [&](auto&& self, NodeSet& s) -> void {
    if (static_cast<int>(cur.events.size()) == params.length) {
      out.push_back(cur);
      return;
    }
    std::vector<EventId> next;
    const double before = cur.events.empty() ? anchor_time : g.event(cur.events.back()).t;
    collect_admissible(g, s, before, anchor_time, params, next);
    if (next.empty()) {
      if (!cur.events.empty()) {
        MotifInstance t = cur;
        t.truncated = true;
        out.push_back(std::move(t));
      }
      return;
    }
    for (EventId id : next) {
      NodeSet s2 = s;
      s2.add(g.event(id).u);
      s2.add(g.event(id).v);
      cur.events.push_back(id);
      self(self, s2);
      cur.events.pop_back();
    }
  };
  NodeSet s;
  s.add(anchor);
  recurse(recurse, s);
  return out;
}

std::vector<MotifCode> motif_alphabet(int max_nodes, int length) {
  check_params({max_nodes, length, 1.0});
  std::vector<MotifCode> out;
  std::vector<std::pair<MotifCode, int>> level{{MotifCode{{0, 1}}, 2}};
  for (int len = 1; len <= length; ++len) {
    std::vector<std::pair<MotifCode, int>> next;
    for (const auto& [code, used] : level) {
      out.push_back(code);
      if (len == length) continue;
      for (int a = 0; a < used; ++a) {
        for (int b = a + 1; b < used; ++b) {
          MotifCode c = code;
          c.digits.push_back(static_cast<std::uint8_t>(a));
          c.digits.push_back(static_cast<std::uint8_t>(b));
          next.emplace_back(std::move(c), used);
        }
        if (used < max_nodes) {
          MotifCode c = code;
          c.digits.push_back(static_cast<std::uint8_t>(a));
          c.digits.push_back(static_cast<std::uint8_t>(used));
          next.emplace_back(std::move(c), used + 1);
        }
      }
    }
    level = std::move(next);
  }
  std::sort(out.begin(), out.end());
  return out;
}

double MotifCensus::prob(const std::string& code) const {
  if (total == 0) return 0.0;
  auto it = counts.find(code);
  return it == counts.end() ? 0.0 : static_cast<double>(it->second) / static_cast<double>(total);
}

std::map<std::string, double> MotifCensus::probs() const {
  std::map<std::string, double> out;
  if (total == 0) return out;
  for (const auto& [code, n] : counts) out[code] = static_cast<double>(n) / static_cast<double>(total);
  return out;
}

nlohmann::ordered_json MotifCensus::to_json() const {
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& [code, n] : counts) {
    j[code] = {{"count", n}, {"prob", prob(code)}};
  }
  return j;
}

MotifCensus census(const TemporalGraph& g, std::span<const MotifInstance> instances) {
  MotifCensus c;
  for (const auto& inst : instances) {
    ++c.counts[motif_code(g, inst).str()];
    ++c.total;
    if (inst.truncated) ++c.truncated;
  }
  return c;
}

TemporalGraph null_model(const TemporalGraph& g, std::uint64_t seed) {
  std::vector<double> times;
  times.reserve(g.event_count());
  for (const auto& e : g.events()) times.push_back(e.t);
  SplitMix64 rng(derive_seed(seed, {0x4e554c4cULL}));
  for (std::size_t i = times.size(); i > 1; --i) {
    std::swap(times[i - 1], times[uniform_index(rng, i)]);
  }
  std::vector<Event> events = g.events();
  for (std::size_t i = 0; i < events.size(); ++i) events[i].t = times[i];
  auto out = TemporalGraph::from_events(std::move(events), g.node_count(), g.attr_width());
  out.set_node_labels(g.node_labels());
  return out;
}

MotifCensus node_census(const TemporalGraph& g, const MotifParams& params, int per_node,
                        std::uint64_t seed) {
  if (per_node < 1) throw ConfigError("per-node motif count must be >= 1");
  MotifCensus total;
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    auto inc = g.incident(static_cast<NodeId>(n));
    if (inc.empty()) continue;
    const double last = g.event(inc.back()).t;
    const double anchor_time = std::nextafter(last, std::numeric_limits<double>::infinity());
    auto inst = sample_motifs(g, static_cast<NodeId>(n), anchor_time, params, per_node, seed);
    auto c = census(g, inst);
    for (const auto& [code, k] : c.counts) total.counts[code] += k;
    total.total += c.total;
    total.truncated += c.truncated;
  }
  return total;
}

std::map<std::string, double> smoothed_probs(const MotifCensus& c, int max_nodes, int length,
                                             double smoothing) {
  if (smoothing < 0.0) throw ConfigError("smoothing must be >= 0");
  std::map<std::string, double> out;
  for (const auto& code : motif_alphabet(max_nodes, length)) out[code.str()] = smoothing;
  for (const auto& [code, p] : c.probs()) out[code] += p;
  double sum = 0.0;
  for (const auto& [code, p] : out) sum += p;
  if (sum <= 0.0) throw NumericError("smoothed_probs: empty census with zero smoothing");
  for (auto& [code, p] : out) p /= sum;
  return out;
}

std::map<std::string, double> null_class_probs(const TemporalGraph& g, const MotifParams& params,
                                               int per_node, std::uint64_t seed, double smoothing) {
  const auto null_graph = null_model(g, seed);
  const auto c = node_census(null_graph, params, per_node, derive_seed(seed, {0xce25u}));
  return smoothed_probs(c, params.max_nodes, params.length, smoothing);
}

double total_variation(const std::map<std::string, double>& a,
                       const std::map<std::string, double>& b) {
  double tv = 0.0;
  for (const auto& [k, p] : a) {
    auto it = b.find(k);
    tv += std::abs(p - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [k, p] : b) {
    if (!a.count(k)) tv += std::abs(p);
  }
  return 0.5 * tv;
}

}  // namespace tempme
