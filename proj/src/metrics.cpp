#include "tempme/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tempme/error.hpp"
#include "tempme/random.hpp"

namespace tempme {

int predicted_label(double p) { return p >= 0.5 ? 1 : 0; }

double fidelity(double full_prediction, double explained_prediction) {
  return predicted_label(full_prediction) == 1 ? explained_prediction - full_prediction
                                               : full_prediction - explained_prediction;
}

double sparsity(std::span<const EventId> retained, const EventSubset& comp_graph) {
  if (comp_graph.empty()) return 0.0;
  std::vector<EventId> r(retained.begin(), retained.end());
  std::sort(r.begin(), r.end());
  r.erase(std::unique(r.begin(), r.end()), r.end());
  std::size_t hit = 0;
  for (EventId id : r) hit += comp_graph.contains(id);
  return static_cast<double>(hit) / static_cast<double>(comp_graph.size());
}

std::size_t retained_count(double level, std::size_t n) {
  if (level < 0.0 || level > 1.0) throw ConfigError("sparsity level outside [0, 1]");
  const double want = std::ceil(level * static_cast<double>(n) - 1e-9);
  return std::min(n, static_cast<std::size_t>(std::max(0.0, want)));
}

std::vector<double> sparsity_levels() {
  std::vector<double> out;
  for (int k = 0; k <= 15; ++k) out.push_back(k / 50.0);
  return out;
}

double acc_auc(std::span<const double> levels, std::span<const double> accuracy) {
  if (levels.size() != accuracy.size() || levels.size() < 2) {
    throw ConfigError("acc_auc: need matching level and accuracy lists of length >= 2");
  }
  double area = 0.0;
  for (std::size_t i = 1; i < levels.size(); ++i) {
    area += 0.5 * (accuracy[i] + accuracy[i - 1]) * (levels[i] - levels[i - 1]);
  }
  return 100.0 * area / (levels.back() - levels.front());
}

std::optional<double> cohesiveness(const TemporalGraph& g, std::span<const EventId> retained,
                                   const EventSubset& comp_graph) {
  const std::size_t k = retained.size();
  if (k < 2) return std::nullopt;
  double lo = INFINITY, hi = -INFINITY;
  for (EventId id : comp_graph.members) {
    lo = std::min(lo, g.event(id).t);
    hi = std::max(hi, g.event(id).t);
  }
  const double span = comp_graph.empty() ? 0.0 : hi - lo;
  double total = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const Event& a = g.event(retained[i]);
    for (std::size_t j = 0; j < k; ++j) {
      if (i == j) continue;
      const Event& b = g.event(retained[j]);
      if (!(a.touches(b.u) || a.touches(b.v))) continue;
      const double ratio = span > 0.0 ? std::abs(a.t - b.t) / span : 0.0;
      total += std::cos(ratio);
    }
  }
  return total / static_cast<double>(k * k - k);
}

std::vector<EventId> random_ranking(const EventSubset& comp_graph, std::uint64_t seed) {
  std::vector<EventId> order = comp_graph.members;
  SplitMix64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[uniform_index(rng, i)]);
  }
  return order;
}

std::vector<EventId> random_baseline(const EventSubset& comp_graph, double level,
                                     std::uint64_t seed) {
  auto order = random_ranking(comp_graph, seed);
  order.resize(retained_count(level, order.size()));
  return order;
}

double average_precision(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw ConfigError("average_precision: size mismatch");
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double positives = 0.0;
  for (int l : labels) positives += l != 0;
  if (positives == 0.0) return 0.0;
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) {
      (labels[idx[j]] != 0 ? tp : fp) += 1.0;
      ++j;
    }
    const double recall = tp / positives;
    ap += (recall - prev_recall) * tp / (tp + fp);
    prev_recall = recall;
    i = j;
  }
  return ap;
}

}  // namespace tempme
