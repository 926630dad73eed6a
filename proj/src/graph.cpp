#include "tempme/graph.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include "tempme/error.hpp"
#include "tempme/random.hpp"

namespace tempme {

bool operator==(const Event& a, const Event& b) {
  return a.id == b.id && a.u == b.u && a.v == b.v && a.t == b.t && a.attrs == b.attrs;
}

bool operator==(const TemporalGraph& a, const TemporalGraph& b) {
  return a.attr_width_ == b.attr_width_ && a.node_count() == b.node_count() &&
         a.events_ == b.events_;
}

TemporalGraph TemporalGraph::from_events(std::vector<Event> events, std::size_t node_count,
                                         std::size_t attr_width) {
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& x, const Event& y) { return x.t < y.t; });
  TemporalGraph g;
  g.attr_width_ = attr_width;
  g.incident_.resize(node_count);
  for (std::size_t i = 0; i < events.size(); ++i) {
    Event& e = events[i];
    if (e.u < 0 || e.v < 0 || static_cast<std::size_t>(e.u) >= node_count ||
        static_cast<std::size_t>(e.v) >= node_count) {
      throw SchemaError("event endpoint outside [0, node_count)");
    }
    if (e.u == e.v) throw SchemaError("self-loop event at t=" + std::to_string(e.t));
    if (e.attrs.size() != attr_width) {
      throw SchemaError("event attribute width " + std::to_string(e.attrs.size()) +
                        " != graph attribute width " + std::to_string(attr_width));
    }
    if (!std::isfinite(e.t)) throw SchemaError("non-finite timestamp");
    e.id = static_cast<EventId>(i);
    g.incident_[static_cast<std::size_t>(e.u)].push_back(e.id);
    g.incident_[static_cast<std::size_t>(e.v)].push_back(e.id);
  }
  g.events_ = std::move(events);
  return g;
}

std::span<const EventId> TemporalGraph::incident(NodeId node) const {
  const auto& list = incident_.at(static_cast<std::size_t>(node));
  return {list.data(), list.size()};
}

std::span<const EventId> TemporalGraph::incident_before(NodeId node, double before,
                                                        bool strict) const {
  const auto& list = incident_.at(static_cast<std::size_t>(node));
  auto end = strict ? std::lower_bound(list.begin(), list.end(), before,
                                       [this](EventId id, double t) { return events_[id].t < t; })
                    : std::upper_bound(list.begin(), list.end(), before,
                                       [this](double t, EventId id) { return t < events_[id].t; });
  return {list.data(), static_cast<std::size_t>(end - list.begin())};
}

std::size_t TemporalGraph::events_before(double before) const {
  auto it = std::lower_bound(events_.begin(), events_.end(), before,
                             [](const Event& e, double t) { return e.t < t; });
  return static_cast<std::size_t>(it - events_.begin());
}

nlohmann::ordered_json TemporalGraph::to_json() const {
  nlohmann::ordered_json j;
  j["node_count"] = node_count();
  j["attr_width"] = attr_width_;
  auto arr = nlohmann::ordered_json::array();
  for (const auto& e : events_) {
    nlohmann::ordered_json je;
    je["id"] = e.id;
    je["u"] = e.u;
    je["v"] = e.v;
    je["t"] = e.t;
    je["attrs"] = e.attrs;
    arr.push_back(std::move(je));
  }
  j["events"] = std::move(arr);
  if (!labels_.empty()) j["node_labels"] = labels_;
  return j;
}

TemporalGraph TemporalGraph::from_json(const nlohmann::json& j) {
  try {
    const auto node_count = j.at("node_count").get<std::size_t>();
    const auto attr_width = j.at("attr_width").get<std::size_t>();
    std::vector<Event> events;
    for (const auto& je : j.at("events")) {
      Event e;
      e.u = je.at("u").get<NodeId>();
      e.v = je.at("v").get<NodeId>();
      e.t = je.at("t").get<double>();
      e.attrs = je.at("attrs").get<std::vector<double>>();
      events.push_back(std::move(e));
    }
    auto g = from_events(std::move(events), node_count, attr_width);
    if (j.contains("node_labels")) g.labels_ = j["node_labels"].get<std::vector<std::string>>();
    return g;
  } catch (const nlohmann::json::exception& ex) {
    throw SchemaError(std::string("malformed graph JSON: ") + ex.what());
  }
}

void TemporalGraph::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << to_json().dump() << '\n';
}

TemporalGraph TemporalGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DependencyError("missing graph file " + path.string());
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& ex) {
    throw SchemaError("cannot parse " + path.string() + ": " + ex.what());
  }
}

// ---------------------------------------------------------------------------

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

struct RawRow {
  std::string u, v;
  double t;
  std::vector<double> attrs;
};

}  // namespace

TemporalGraph ingest_csv_text(const std::string& text, bool has_header, IngestReport* report) {
  IngestReport local;
  IngestReport& rep = report ? *report : local;
  rep = IngestReport{};

  std::vector<RawRow> rows;
  std::optional<std::size_t> width;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && has_header) continue;
    if (trim(line).empty()) continue;
    std::vector<std::string_view> fields;
    std::string_view rest(line);
    while (true) {
      auto pos = rest.find(',');
      fields.push_back(trim(rest.substr(0, pos)));
      if (pos == std::string_view::npos) break;
      rest.remove_prefix(pos + 1);
    }
    if (fields.size() < 3) throw IngestError(line_no, "expected at least 3 fields (u,v,t)");
    if (fields[0].empty() || fields[1].empty()) throw IngestError(line_no, "empty node field");
    RawRow row{std::string(fields[0]), std::string(fields[1]), 0.0, {}};
    if (!parse_double(fields[2], row.t)) throw IngestError(line_no, "timestamp is not a finite number");
    for (std::size_t k = 3; k < fields.size(); ++k) {
      double a;
      if (!parse_double(fields[k], a)) {
        throw IngestError(line_no, "attribute " + std::to_string(k - 2) + " is not a finite number");
      }
      row.attrs.push_back(a);
    }
    if (!width) {
      width = row.attrs.size();
    } else if (*width != row.attrs.size()) {
      throw SchemaError("line " + std::to_string(line_no) + ": attribute width " +
                        std::to_string(row.attrs.size()) + " differs from " + std::to_string(*width));
    }
    ++rep.rows_read;
    if (row.u == row.v) {
      ++rep.self_loops_skipped;
      rep.skipped_lines.push_back(line_no);
      continue;
    }
    rows.push_back(std::move(row));
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const RawRow& a, const RawRow& b) { return a.t < b.t; });
  std::unordered_map<std::string, NodeId> ids;
  std::vector<std::string> labels;
  auto intern = [&](const std::string& label) {
    auto [it, inserted] = ids.emplace(label, static_cast<NodeId>(labels.size()));
    if (inserted) labels.push_back(label);
    return it->second;
  };
  std::vector<Event> events;
  events.reserve(rows.size());
  for (auto& r : rows) {
    Event e;
    e.u = intern(r.u);
    e.v = intern(r.v);
    e.t = r.t;
    e.attrs = std::move(r.attrs);
    events.push_back(std::move(e));
  }
  auto g = TemporalGraph::from_events(std::move(events), labels.size(), width.value_or(0));
  g.set_node_labels(std::move(labels));
  return g;
}

TemporalGraph ingest_csv(const std::filesystem::path& path, bool has_header, IngestReport* report) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DependencyError("missing input file " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return ingest_csv_text(buf.str(), has_header, report);
}

// ---------------------------------------------------------------------------

std::vector<EventId> neighbor_events(const TemporalGraph& g, std::span<const NodeId> nodes,
                                     double before, bool strict) {
  std::vector<EventId> out;
  for (NodeId n : nodes) {
    auto prefix = g.incident_before(n, before, strict);
    out.insert(out.end(), prefix.begin(), prefix.end());
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

EventSubset computational_graph(const TemporalGraph& g, NodeId u, NodeId v, double t, int hops,
                                int per_hop_cap, EventId target) {
  if (hops < 1) throw ConfigError("computational_graph: hops must be >= 1");
  if (per_hop_cap < 1) throw ConfigError("computational_graph: per_hop_cap must be >= 1");
  EventSubset sub;
  sub.target = target;

  // Frontier entries are (node, time bound) pairs, expanded at most once each.
  std::set<std::pair<NodeId, double>> frontier{{u, t}, {v, t}};
  std::set<std::pair<NodeId, double>> expanded;
  for (int hop = 1; hop <= hops && !frontier.empty(); ++hop) {
    std::set<std::pair<NodeId, double>> next;
    for (const auto& [node, bound] : frontier) {
      if (!expanded.insert({node, bound}).second) continue;
      auto prefix = g.incident_before(node, bound, true);
      const std::size_t take = std::min<std::size_t>(prefix.size(), static_cast<std::size_t>(per_hop_cap));
      for (std::size_t k = prefix.size() - take; k < prefix.size(); ++k) {
        const Event& e = g.event(prefix[k]);
        sub.hop_of.emplace(e.id, hop);
        next.insert({e.other(node), e.t});
      }
    }
    frontier = std::move(next);
  }
  sub.members.reserve(sub.hop_of.size());
  for (const auto& [id, hop] : sub.hop_of) sub.members.push_back(id);
  return sub;
}

EventSubset computational_graph(const TemporalGraph& g, const Event& target, int hops,
                                int per_hop_cap) {
  return computational_graph(g, target.u, target.v, target.t, hops, per_hop_cap, target.id);
}

// ---------------------------------------------------------------------------

std::optional<SyntheticRule> parse_rule(const std::string& name) {
  if (name == "triadic-closure") return SyntheticRule::TriadicClosure;
  if (name == "preferential-attachment") return SyntheticRule::PreferentialAttachment;
  if (name == "uniform-random") return SyntheticRule::UniformRandom;
  return std::nullopt;
}

std::string rule_name(SyntheticRule rule) {
  switch (rule) {
    case SyntheticRule::TriadicClosure: return "triadic-closure";
    case SyntheticRule::PreferentialAttachment: return "preferential-attachment";
    case SyntheticRule::UniformRandom: return "uniform-random";
  }
  return "unknown";
}

std::size_t triadic_window(std::size_t n_nodes) { return n_nodes; }

namespace {

constexpr double kWedgeProbability = 0.8;
constexpr int kWedgeAttempts = 16;

std::pair<NodeId, NodeId> uniform_pair(SplitMix64& rng, std::size_t n) {
  auto a = static_cast<NodeId>(uniform_index(rng, n));
  auto b = static_cast<NodeId>(uniform_index(rng, n - 1));
  if (b >= a) ++b;
  return {a, b};
}

NodeId weighted_node(SplitMix64& rng, const std::vector<std::size_t>& degree, std::size_t total,
                     NodeId exclude) {
  // weights are degree + 1; `total` is their sum over all nodes
  std::size_t mass = total;
  if (exclude >= 0) mass -= degree[static_cast<std::size_t>(exclude)] + 1;
  std::uint64_t r = uniform_index(rng, mass);
  for (std::size_t i = 0; i < degree.size(); ++i) {
    if (static_cast<NodeId>(i) == exclude) continue;
    const std::size_t w = degree[i] + 1;
    if (r < w) return static_cast<NodeId>(i);
    r -= w;
  }
  return static_cast<NodeId>(degree.size() - 1);
}

}  // namespace

TemporalGraph generate_synthetic(SyntheticRule rule, std::size_t n_nodes, std::size_t n_events,
                                 std::uint64_t seed, SyntheticTrace* trace) {
  if (n_nodes < 3) throw ConfigError("generate_synthetic: n_nodes must be >= 3");
  if (n_events < 1) throw ConfigError("generate_synthetic: n_events must be >= 1");
  SplitMix64 rng(derive_seed(seed, {0x5e7e5u, static_cast<std::uint64_t>(rule)}));
  std::vector<Event> events;
  events.reserve(n_events);
  std::vector<std::size_t> degree(n_nodes, 0);
  if (trace) {
    trace->closes_wedge.assign(n_events, false);
    trace->wedge.assign(n_events, {-1, -1});
  }
  const std::size_t window = triadic_window(n_nodes);

  for (std::size_t k = 0; k < n_events; ++k) {
    std::pair<NodeId, NodeId> pair{-1, -1};
    switch (rule) {
      case SyntheticRule::UniformRandom:
        pair = uniform_pair(rng, n_nodes);
        break;
      case SyntheticRule::PreferentialAttachment: {
        const std::size_t total = 2 * k + n_nodes;
        NodeId a = weighted_node(rng, degree, total, -1);
        NodeId b = weighted_node(rng, degree, total, a);
        pair = {a, b};
        break;
      }
      case SyntheticRule::TriadicClosure: {
        const std::size_t lo = k > window ? k - window : 0;
        const bool try_wedge = k >= 2 && uniform_open01(rng) < kWedgeProbability;
        if (try_wedge) {
          auto recent_pair = [&](NodeId a, NodeId b) {
            for (std::size_t i = lo; i < k; ++i) {
              const Event& e = events[i];
              if ((e.u == a && e.v == b) || (e.u == b && e.v == a)) return true;
            }
            return false;
          };
          for (int attempt = 0; attempt < kWedgeAttempts && pair.first < 0; ++attempt) {
            const std::size_t i1 = lo + uniform_index(rng, k - lo);
            const Event& e1 = events[i1];
            const NodeId center = (rng() & 1u) ? e1.u : e1.v;
            const NodeId a = e1.other(center);
            std::vector<std::size_t> second;
            for (std::size_t i = lo; i < k; ++i) {
              if (i != i1 && events[i].touches(center) && events[i].other(center) != a) {
                second.push_back(i);
              }
            }
            if (second.empty()) continue;
            const std::size_t i2 = second[uniform_index(rng, second.size())];
            const NodeId b = events[i2].other(center);
            if (recent_pair(a, b)) continue;
            pair = (rng() & 1u) ? std::pair{a, b} : std::pair{b, a};
            if (trace) {
              trace->closes_wedge[k] = true;
              trace->wedge[k] = {static_cast<EventId>(std::max(i1, i2)),
                                 static_cast<EventId>(std::min(i1, i2))};
            }
          }
        }
        if (pair.first < 0) pair = uniform_pair(rng, n_nodes);
        break;
      }
    }
    Event e;
    e.u = pair.first;
    e.v = pair.second;
    e.t = static_cast<double>(k + 1);
    ++degree[static_cast<std::size_t>(e.u)];
    ++degree[static_cast<std::size_t>(e.v)];
    events.push_back(std::move(e));
  }
  return TemporalGraph::from_events(std::move(events), n_nodes, 0);
}

std::vector<std::size_t> degree_spectrum(const TemporalGraph& g) {
  std::vector<std::size_t> out;
  out.reserve(g.node_count());
  for (std::size_t n = 0; n < g.node_count(); ++n) {
    out.push_back(g.degree(static_cast<NodeId>(n)));
  }
  std::sort(out.begin(), out.end(), std::greater<>());
  return out;
}

}  // namespace tempme
