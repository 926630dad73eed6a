#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace tempme {

struct GradCheckEntry {
  std::string component;
  int points = 0;
  double max_rel_error = 0.0;
  std::string worst_param;
  bool passed = false;
};

// Finite-difference checks of the differentiable pieces at `points` random
// parameter draws each: time encoder, GINE layer, motif encoder, importance
// scorer, concrete relaxation and the full explainer loss.
std::vector<GradCheckEntry> gradient_suite(std::uint64_t seed, int points = 10,
                                           double tolerance = 1e-4);

nlohmann::ordered_json to_json(const std::vector<GradCheckEntry>& entries);

}  // namespace tempme
