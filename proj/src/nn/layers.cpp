#include "tempme/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "tempme/error.hpp"

namespace tempme::nn {

Affine Affine::create(ParameterStore& store, const std::string& name, std::size_t in,
                      std::size_t out, SplitMix64& rng, Init init) {
  Affine a;
  a.in = in;
  a.out = out;
  a.weight = store.add(name + ".weight", in, out, init, rng);
  a.bias = store.add(name + ".bias", 1, out, Init::Zeros, rng);
  return a;
}

Var Affine::operator()(Tape& t, const ParameterStore& s, Var x) const {
  if (t.value(x).cols != in) {
    throw ShapeError("affine: input " + t.value(x).shape_str() + " vs weight (" +
                     std::to_string(in) + "x" + std::to_string(out) + ")");
  }
  return t.add_row(t.matmul(x, t.param(s, weight)), t.param(s, bias));
}

Mlp Mlp::create(ParameterStore& store, const std::string& name,
                std::span<const std::size_t> widths, SplitMix64& rng) {
  if (widths.size() < 2) throw ShapeError("mlp needs at least input and output widths");
  Mlp m;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    m.layers.push_back(Affine::create(store, name + "." + std::to_string(i), widths[i],
                                      widths[i + 1], rng));
  }
  return m;
}

Var Mlp::operator()(Tape& t, const ParameterStore& s, Var x) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](t, s, x);
    if (i + 1 < layers.size()) x = t.relu(x);
  }
  return x;
}

TimeEncoder TimeEncoder::create(ParameterStore& store, const std::string& name, std::size_t d,
                                double time_span) {
  if (d == 0) throw ShapeError("time encoder needs d >= 1");
  const double lo = std::log(1.0 / std::max(time_span, 1.0));
  std::vector<double> freq(d, 1.0);
  for (std::size_t k = 0; k < d && d > 1; ++k) {
    freq[k] = std::exp(lo * (1.0 - static_cast<double>(k) / static_cast<double>(d - 1)));
  }
  TimeEncoder enc;
  enc.d = d;
  enc.freq = store.add(name + ".freq", 1, d, std::move(freq));
  return enc;
}

std::vector<double> time_encode_values(std::span<const double> freq, double dt) {
  const double scale = std::sqrt(1.0 / static_cast<double>(freq.size()));
  std::vector<double> out(2 * freq.size());
  for (std::size_t k = 0; k < freq.size(); ++k) {
    out[2 * k] = scale * std::cos(freq[k] * dt);
    out[2 * k + 1] = scale * std::sin(freq[k] * dt);
  }
  return out;
}

GineLayer GineLayer::create(ParameterStore& store, const std::string& name, std::size_t width,
                            std::size_t edge_width, SplitMix64& rng) {
  GineLayer g;
  g.width = width;
  const std::size_t widths[] = {width, width, width};
  g.node_net = Mlp::create(store, name + ".h1", widths, rng);
  g.edge_proj = Affine::create(store, name + ".h2", edge_width, width, rng);
  g.eps = store.add(name + ".eps", 1, 1, std::vector<double>{0.0});
  return g;
}

Var GineLayer::operator()(Tape& t, const ParameterStore& s, Var x,
                          std::span<const MessageEdge> edges, Var edge_feats) const {
  const std::size_t n = t.value(x).rows;
  if (t.value(x).cols != width) {
    throw ShapeError("gine: node features " + t.value(x).shape_str() + " vs layer width " +
                     std::to_string(width));
  }
  Var projected = edge_proj(t, s, edge_feats);
  std::vector<int> src, dst, rows;
  src.reserve(edges.size());
  dst.reserve(edges.size());
  rows.reserve(edges.size());
  for (const auto& e : edges) {
    src.push_back(e.src);
    dst.push_back(e.dst);
    rows.push_back(e.feature_row);
  }
  Var msg = t.relu(t.add(t.gather_rows(x, src), t.gather_rows(projected, rows)));
  Var agg = t.scatter_add_rows(msg, dst, n);
  Var self = t.add(x, t.mul_scalar(x, t.param(s, eps)));
  return node_net(t, s, t.add(self, agg));
}

std::vector<MessageEdge> undirected_edges(std::span<const MessageEdge> events) {
  std::vector<MessageEdge> out;
  out.reserve(events.size() * 2);
  for (const auto& e : events) {
    out.push_back({e.src, e.dst, e.feature_row});
    out.push_back({e.dst, e.src, e.feature_row});
  }
  std::sort(out.begin(), out.end(), [](const MessageEdge& a, const MessageEdge& b) {
    if (a.dst != b.dst) return a.dst < b.dst;
    if (a.src != b.src) return a.src < b.src;
    return a.feature_row < b.feature_row;
  });
  return out;
}

Var concrete_sample(Tape& t, Var p, double temperature, std::span<const double> uniforms) {
  const Matrix& pv = t.value(p);
  if (pv.cols != 1 || pv.rows != uniforms.size()) {
    throw ShapeError("concrete_sample: scores " + pv.shape_str() + " vs " +
                     std::to_string(uniforms.size()) + " uniform draws");
  }
  if (!(temperature > 0.0)) throw ShapeError("concrete_sample: temperature must be > 0");
  Matrix noise(uniforms.size(), 1);
  for (std::size_t i = 0; i < uniforms.size(); ++i) {
    noise.data[i] = std::log(uniforms[i]) - std::log(1.0 - uniforms[i]);
  }
  Var pc = t.clamp(p, kScoreClampLo, kScoreClampHi);
  Var logit = t.sub(t.log(pc), t.log(t.add_const(t.scale(pc, -1.0), 1.0)));
  return t.sigmoid(t.scale(t.add(logit, t.constant(std::move(noise))), 1.0 / temperature));
}

double concrete_sample_value(double p, double temperature, double uniform) {
  p = std::clamp(p, kScoreClampLo, kScoreClampHi);
  const double x =
      (std::log(p) - std::log(1.0 - p) + std::log(uniform) - std::log(1.0 - uniform)) / temperature;
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace tempme::nn
