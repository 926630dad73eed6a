#pragma once

#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tempme/graph.hpp"
#include "tempme/motif.hpp"
#include "tempme/nn/matrix.hpp"

namespace tempme {

using NodePair = std::pair<NodeId, NodeId>;  // first < second

inline NodePair make_pair_key(NodeId a, NodeId b) { return a < b ? NodePair{a, b} : NodePair{b, a}; }

// Position-indexed occurrence counts h(pair)[j]: how many instances have an
// event between the pair at position j, regardless of its timestamp.
using StructuralMap = std::map<NodePair, std::vector<double>>;

StructuralMap anonymize(const TemporalGraph& g, std::span<const MotifInstance> instances,
                        int length);

// Row j: attrs || T(anchor_time - t_j) || h(pair_j), one row per event of the
// instance. Throws InvariantError when a pair is missing from `structural`.
nn::Matrix event_features(const TemporalGraph& g, const MotifInstance& inst,
                          const StructuralMap& structural, std::span<const double> time_freq);

std::size_t event_feature_width(std::size_t attr_width, std::size_t time_d, int length);

std::string matrix_csv(const nn::Matrix& m);

}  // namespace tempme
