#pragma once

#include <span>
#include <string>
#include <vector>

#include "tempme/nn/tape.hpp"

namespace tempme::nn {

// y = x W + b with W (in x out), b (1 x out).
struct Affine {
  ParameterStore::Handle weight = 0;
  ParameterStore::Handle bias = 0;
  std::size_t in = 0;
  std::size_t out = 0;

  static Affine create(ParameterStore& store, const std::string& name, std::size_t in,
                       std::size_t out, SplitMix64& rng, Init init = Init::Xavier);
  Var operator()(Tape& t, const ParameterStore& s, Var x) const;
};

// Affine layers with ReLU between them (none after the last).
struct Mlp {
  std::vector<Affine> layers;

  static Mlp create(ParameterStore& store, const std::string& name,
                    std::span<const std::size_t> widths, SplitMix64& rng);
  Var operator()(Tape& t, const ParameterStore& s, Var x) const;
  std::size_t out() const { return layers.back().out; }
};

// Learnable sinusoidal encoder of time gaps, output width 2d.
struct TimeEncoder {
  ParameterStore::Handle freq = 0;
  std::size_t d = 0;

  // Frequencies start log-spaced over [1/time_span, 1].
  static TimeEncoder create(ParameterStore& store, const std::string& name, std::size_t d,
                            double time_span);
  Var operator()(Tape& t, const ParameterStore& s, std::span<const double> dt) const {
    return t.time_encode(t.param(s, freq), dt);
  }
  std::size_t width() const { return 2 * d; }
};

std::vector<double> time_encode_values(std::span<const double> freq, double dt);

// Directed message edge src -> dst. Undirected events contribute both ways.
struct MessageEdge {
  int src;
  int dst;
  int feature_row;
};

// x_i' = h1((1 + eps) x_i + sum_j ReLU(x_j + h2(E_ji))).
struct GineLayer {
  Mlp node_net;       // h1
  Affine edge_proj;   // h2, projects edge features to the node width
  ParameterStore::Handle eps = 0;
  std::size_t width = 0;

  static GineLayer create(ParameterStore& store, const std::string& name, std::size_t width,
                          std::size_t edge_width, SplitMix64& rng);
  // `edges` must be sorted by (dst, src) for a fixed summation order; see
  // undirected_edges().
  Var operator()(Tape& t, const ParameterStore& s, Var x, std::span<const MessageEdge> edges,
                 Var edge_feats) const;
};

// Both directions of each undirected (a, b, feature_row) edge, in (dst, src, row) order.
std::vector<MessageEdge> undirected_edges(std::span<const MessageEdge> events);

inline constexpr double kScoreClampLo = 1e-6;
inline constexpr double kScoreClampHi = 1.0 - 1e-6;
inline constexpr double kDefaultTemperature = 0.5;

// sigma((log p - log(1-p) + log u - log(1-u)) / lambda) for a column of scores
// p and uniform draws u. p is clamped to [1e-6, 1 - 1e-6] first.
Var concrete_sample(Tape& t, Var p, double temperature, std::span<const double> uniforms);
double concrete_sample_value(double p, double temperature, double uniform);

}  // namespace tempme::nn
