#pragma once

#include <functional>
#include <string>

#include "tempme/nn/tape.hpp"

namespace tempme::nn {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
};

// Builds the scalar loss on a fresh tape.
using LossFn = std::function<Var(Tape&)>;

// Compares reverse-mode gradients with central differences for every value of
// every parameter (or the first `max_per_param` of each when nonzero). The
// relative error is |a - n| / max(|a|, |n|, floor).
GradCheckResult grad_check(ParameterStore& store, const LossFn& loss, double eps = 1e-6,
                           std::size_t max_per_param = 0, double floor = 1e-6);

}  // namespace tempme::nn
