#pragma once

#include <vector>

#include "tempme/nn/params.hpp"

namespace tempme::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adaptive-moment optimizer over every parameter of a store.
class Adam {
 public:
  explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}

  // Applies one update from the store's grad buffers. Throws NumericError
  // naming the parameter and index if any gradient is non-finite; the store is
  // left untouched in that case.
  void step(ParameterStore& store);
  long steps() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

}  // namespace tempme::nn
