#include "tempme/features.hpp"

#include <sstream>

#include "tempme/error.hpp"
#include "tempme/nn/layers.hpp"

namespace tempme {

StructuralMap anonymize(const TemporalGraph& g, std::span<const MotifInstance> instances,
                        int length) {
  if (length < 1) throw ConfigError("anonymize: length must be >= 1");
  StructuralMap out;
  for (const auto& inst : instances) {
    for (std::size_t j = 0; j < inst.events.size() && j < static_cast<std::size_t>(length); ++j) {
      const Event& e = g.event(inst.events[j]);
      auto& h = out[make_pair_key(e.u, e.v)];
      if (h.empty()) h.assign(static_cast<std::size_t>(length), 0.0);
      h[j] += 1.0;
    }
  }
  return out;
}

std::size_t event_feature_width(std::size_t attr_width, std::size_t time_d, int length) {
  return attr_width + 2 * time_d + static_cast<std::size_t>(length);
}

nn::Matrix event_features(const TemporalGraph& g, const MotifInstance& inst,
                          const StructuralMap& structural, std::span<const double> time_freq) {
  if (structural.empty()) throw InvariantError("event_features: empty structural map");
  const std::size_t l = structural.begin()->second.size();
  const std::size_t width = event_feature_width(g.attr_width(), time_freq.size(), static_cast<int>(l));
  nn::Matrix m(inst.events.size(), width);
  for (std::size_t j = 0; j < inst.events.size(); ++j) {
    const Event& e = g.event(inst.events[j]);
    auto it = structural.find(make_pair_key(e.u, e.v));
    if (it == structural.end()) {
      throw InvariantError("event_features: pair (" + std::to_string(e.u) + "," +
                           std::to_string(e.v) + ") missing from the structural map");
    }
    auto row = m.row_span(j);
    std::size_t c = 0;
    for (double a : e.attrs) row[c++] = a;
    for (double x : nn::time_encode_values(time_freq, inst.anchor_time - e.t)) row[c++] = x;
    for (double h : it->second) row[c++] = h;
  }
  return m;
}

std::string matrix_csv(const nn::Matrix& m) {
  std::ostringstream out;
  out.precision(17);
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (std::size_t j = 0; j < m.cols; ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace tempme
