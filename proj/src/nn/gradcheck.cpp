#include "tempme/nn/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace tempme::nn {

GradCheckResult grad_check(ParameterStore& store, const LossFn& loss, double eps,
                           std::size_t max_per_param, double floor) {
  store.zero_grad();
  {
    Tape t(&store);
    t.backward(loss(t));
  }
  auto eval = [&] {
    Tape t(&store);
    return t.item(loss(t));
  };
  GradCheckResult res;
  for (std::size_t h = 0; h < store.size(); ++h) {
    const std::size_t n = max_per_param ? std::min(max_per_param, store[h].value.size())
                                        : store[h].value.size();
    for (std::size_t k = 0; k < n; ++k) {
      double& x = store[h].value[k];
      const double saved = x;
      x = saved + eps;
      const double up = eval();
      x = saved - eps;
      const double down = eval();
      x = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double analytic = store[h].grad[k];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
      const double rel = std::abs(analytic - numeric) / denom;
      ++res.checked;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_param = store[h].name;
        res.worst_index = k;
      }
    }
  }
  store.zero_grad();
  return res;
}

}  // namespace tempme::nn
