#pragma once

// Brute-force reference implementations used only by the tests. None of them
// call into the library's algorithms beyond reading graph fields.

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <vector>

#include "tempme/graph.hpp"
#include "tempme/motif.hpp"

namespace oracle {

using tempme::EventId;
using tempme::NodeId;
using tempme::TemporalGraph;

inline std::vector<EventId> neighbor_events(const TemporalGraph& g, const std::set<NodeId>& s,
                                            double before, bool strict) {
  std::vector<EventId> out;
  for (const auto& e : g.events()) {
    bool early = strict ? e.t < before : e.t <= before;
    if (early && (s.count(e.u) || s.count(e.v))) out.push_back(e.id);
  }
  return out;
}

// Checks a motif instance from first principles.
inline bool valid_instance(const TemporalGraph& g, const tempme::MotifInstance& inst, int n, int l,
                           double delta) {
  if (inst.events.empty() || static_cast<int>(inst.events.size()) > l) return false;
  const auto& first = g.event(inst.events[0]);
  if (!first.touches(inst.anchor)) return false;
  std::set<NodeId> nodes{inst.anchor};
  double prev = inst.anchor_time;
  for (EventId id : inst.events) {
    const auto& e = g.event(id);
    if (!(e.t < prev)) return false;
    if (inst.anchor_time - e.t > delta) return false;
    if (!nodes.count(e.u) && !nodes.count(e.v)) return false;
    nodes.insert(e.u);
    nodes.insert(e.v);
    if (static_cast<int>(nodes.size()) > n) return false;
    prev = e.t;
  }
  return true;
}

// Every reverse-time prefix-connected sequence of length exactly `len`,
// starting at the anchor, by nested scans over the whole event list.
inline void all_sequences(const TemporalGraph& g, NodeId anchor, double t0, int n, int len,
                          double delta, std::vector<EventId>& cur, std::set<NodeId> nodes,
                          double prev, std::vector<std::vector<EventId>>& out) {
  if (static_cast<int>(cur.size()) == len) {
    out.push_back(cur);
    return;
  }
  for (const auto& e : g.events()) {
    if (!(e.t < prev) || t0 - e.t > delta) continue;
    if (!nodes.count(e.u) && !nodes.count(e.v)) continue;
    auto next = nodes;
    next.insert(e.u);
    next.insert(e.v);
    if (static_cast<int>(next.size()) > n) continue;
    cur.push_back(e.id);
    all_sequences(g, anchor, t0, n, len, delta, cur, next, e.t, out);
    cur.pop_back();
  }
}

// Oracle support: full-length sequences plus prefixes that cannot be extended.
inline std::set<std::vector<EventId>> support(const TemporalGraph& g, NodeId anchor, double t0,
                                              int n, int l, double delta) {
  std::set<std::vector<EventId>> out;
  std::vector<std::set<std::vector<EventId>>> by_len(static_cast<std::size_t>(l) + 2);
  for (int len = 1; len <= l; ++len) {
    std::vector<std::vector<EventId>> seqs;
    std::vector<EventId> cur;
    all_sequences(g, anchor, t0, n, len, delta, cur, {anchor}, t0, seqs);
    by_len[static_cast<std::size_t>(len)] = {seqs.begin(), seqs.end()};
  }
  for (int len = 1; len <= l; ++len) {
    for (const auto& s : by_len[static_cast<std::size_t>(len)]) {
      if (len == l) {
        out.insert(s);
        continue;
      }
      bool extended = false;
      for (const auto& longer : by_len[static_cast<std::size_t>(len) + 1]) {
        if (std::equal(s.begin(), s.end(), longer.begin())) extended = true;
      }
      if (!extended) out.insert(s);
    }
  }
  return out;
}


// Event-order topology equivalence with the anchor mapped to the anchor: a
// bijection of touched nodes under which the i-th events join the same pair.
inline bool equivalent(const TemporalGraph& g, const tempme::MotifInstance& a,
                       const tempme::MotifInstance& b) {
  if (a.events.size() != b.events.size()) return false;
  std::set<NodeId> na, nb;
  for (EventId id : a.events) na.insert({g.event(id).u, g.event(id).v});
  for (EventId id : b.events) nb.insert({g.event(id).u, g.event(id).v});
  na.insert(a.anchor);
  nb.insert(b.anchor);
  if (na.size() != nb.size()) return false;
  std::vector<NodeId> src(na.begin(), na.end());
  std::vector<NodeId> dst(nb.begin(), nb.end());
  std::sort(dst.begin(), dst.end());
  do {
    std::map<NodeId, NodeId> f;
    for (std::size_t i = 0; i < src.size(); ++i) f[src[i]] = dst[i];
    if (f[a.anchor] != b.anchor) continue;
    bool ok = true;
    for (std::size_t i = 0; i < a.events.size() && ok; ++i) {
      const auto& ea = g.event(a.events[i]);
      const auto& eb = g.event(b.events[i]);
      std::set<NodeId> pa{f[ea.u], f[ea.v]};
      std::set<NodeId> pb{eb.u, eb.v};
      ok = pa == pb;
    }
    if (ok) return true;
  } while (std::next_permutation(dst.begin(), dst.end()));
  return false;
}

inline double bernoulli_kl(double a, double b) {
  return a * std::log(a / b) + (1.0 - a) * std::log((1.0 - a) / (1.0 - b));
}

// Written in terms of s and q exactly as the closed form reads.
inline double kl_empirical(const std::vector<double>& scores, const std::vector<int>& cls,
                           double p, const std::vector<double>& m) {
  double total = 0.0;
  for (double x : scores) total += x;
  const double s = total / static_cast<double>(scores.size());
  double out = (1.0 - s) * std::log((1.0 - s) / (1.0 - p));
  if (total <= 0.0) return out;
  std::vector<double> q(m.size(), 0.0);
  for (std::size_t i = 0; i < scores.size(); ++i) q[static_cast<std::size_t>(cls[i])] += scores[i];
  for (auto& x : q) x /= total;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] > 0.0) out += s * q[i] * std::log(s * q[i] / (p * m[i]));
  }
  return out;
}

inline double trapezoid(const std::vector<double>& x, const std::vector<double>& y) {
  double a = 0.0;
  for (std::size_t i = 1; i < x.size(); ++i) a += 0.5 * (y[i] + y[i - 1]) * (x[i] - x[i - 1]);
  return a;
}

inline double average_precision(std::vector<std::pair<double, int>> scored) {
  // Sum over distinct thresholds of (R_k - R_{k-1}) P_k.
  std::sort(scored.begin(), scored.end(), [](auto a, auto b) { return a.first > b.first; });
  double positives = 0;
  for (auto& s : scored) positives += s.second;
  double tp = 0, fp = 0, prev_recall = 0, ap = 0;
  for (std::size_t i = 0; i < scored.size();) {
    std::size_t j = i;
    while (j < scored.size() && scored[j].first == scored[i].first) {
      tp += scored[j].second;
      fp += 1 - scored[j].second;
      ++j;
    }
    double recall = tp / positives;
    ap += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

}  // namespace oracle
