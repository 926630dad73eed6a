#include "tempme/nn/optim.hpp"

#include <cmath>

#include "tempme/error.hpp"

namespace tempme::nn {

void Adam::step(ParameterStore& store) {
  for (const auto& p : store) {
    for (std::size_t k = 0; k < p.grad.size(); ++k) {
      if (!std::isfinite(p.grad[k])) {
        throw NumericError("non-finite gradient " + std::to_string(p.grad[k]) + " in '" + p.name +
                           "' at index " + std::to_string(k) + " (step " + std::to_string(t_ + 1) + ")");
      }
    }
  }
  if (m_.size() != store.size()) {
    m_.assign(store.size(), {});
    v_.assign(store.size(), {});
    for (std::size_t i = 0; i < store.size(); ++i) {
      m_[i].assign(store[i].value.size(), 0.0);
      v_[i].assign(store[i].value.size(), 0.0);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < store.size(); ++i) {
    Parameter& p = store[i];
    auto& m = m_[i];
    auto& v = v_[i];
    for (std::size_t k = 0; k < p.value.size(); ++k) {
      const double g = p.grad[k];
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
      p.value[k] -= cfg_.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + cfg_.eps);
    }
  }
}

}  // namespace tempme::nn
