#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "tempme/graph.hpp"

namespace tempme {

// Signed gain of the explanation's prediction towards the original label.
// The label is 1 when the full prediction is at least 0.5.
double fidelity(double full_prediction, double explained_prediction);
int predicted_label(double p);

// |retained ∩ G(e)| / |G(e)|; 0 for an empty computational graph.
double sparsity(std::span<const EventId> retained, const EventSubset& comp_graph);

// ceil(s * n) without being thrown off by rounding in s * n.
std::size_t retained_count(double level, std::size_t n);

// Levels 0, 0.02, ..., 0.30.
std::vector<double> sparsity_levels();

// Trapezoid area under accuracy(level), divided by the level span, in percent.
double acc_auc(std::span<const double> levels, std::span<const double> accuracy);

// Mean over ordered pairs of distinct retained events of
// cos(|t_i - t_j| / dT) * [events share a node], dT the span of G(e).
// Empty for fewer than two events.
std::optional<double> cohesiveness(const TemporalGraph& g, std::span<const EventId> retained,
                                   const EventSubset& comp_graph);

// Uniformly random retained set of ceil(s |G(e)|) members, deterministic in seed.
std::vector<EventId> random_baseline(const EventSubset& comp_graph, double level,
                                     std::uint64_t seed);

// A random ranking of G(e); the retained set at any level is a prefix of it.
std::vector<EventId> random_ranking(const EventSubset& comp_graph, std::uint64_t seed);

// Step-wise average precision; tied scores form one threshold.
double average_precision(std::span<const double> scores, std::span<const int> labels);

}  // namespace tempme
