#pragma once

#include <functional>
#include <span>
#include <vector>

#include "tempme/nn/matrix.hpp"
#include "tempme/nn/params.hpp"

namespace tempme::nn {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Records one forward pass. Nodes are appended in evaluation order, so the
// reverse of that order is a valid topological order for backward().
// Gradients of parameter nodes are added to the store's grad buffers.
class Tape {
 public:
  explicit Tape(ParameterStore* store = nullptr) : store_(store) {}

  Var param(ParameterStore::Handle h);
  // Parameter of `store`: tracked when it is this tape's store, otherwise a
  // frozen constant.
  Var param(const ParameterStore& store, ParameterStore::Handle h);
  Var constant(Matrix m);
  Var scalar(double x) { return constant(Matrix(1, 1, x)); }

  const Matrix& value(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).value; }
  double item(Var v) const;
  const Matrix& grad(Var v) const { return nodes_.at(static_cast<std::size_t>(v.id)).grad; }
  std::size_t node_count() const { return nodes_.size(); }

  // Seeds d(out)/d(out) = 1 for a 1x1 output and propagates.
  void backward(Var out);

  // --- primitives ------------------------------------------------------
  Var matmul(Var a, Var b);
  Var transpose(Var a);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var add_row(Var a, Var row);          // a (r x c) + row (1 x c) broadcast
  Var mul_scalar(Var a, Var s);         // a * s, s is 1 x 1
  Var scale(Var a, double c);
  Var softplus(Var a);
  Var add_const(Var a, double c);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var log(Var a);
  Var clamp(Var a, double lo, double hi);
  Var concat_cols(std::span<const Var> parts);
  Var concat_rows(std::span<const Var> parts);
  Var gather_rows(Var a, std::span<const int> index);
  Var scatter_add_rows(Var a, std::span<const int> index, std::size_t out_rows);
  Var segment_mean_rows(Var a, std::span<const int> segment, std::size_t segments);
  Var mean_rows(Var a);
  Var sum(Var a);
  // Column of per-group maxima of a column vector; empty groups give 0.
  Var segment_max(Var a, const std::vector<std::vector<int>>& groups);
  // a_i = w_i exp(s_i) / sum_j w_j exp(s_j) over column vectors; all zero when
  // the weights sum to zero.
  Var weighted_softmax(Var scores, Var weights);
  // sqrt(1/d) [cos(w_1 dt), sin(w_1 dt), ...] for each dt, w is 1 x d.
  Var time_encode(Var freq, std::span<const double> dt);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::function<void(Tape&, int)> backward;
    long param = -1;
  };

  Var push(Matrix value, std::function<void(Tape&, int)> backward = {});
  Node& node(Var v) { return nodes_.at(static_cast<std::size_t>(v.id)); }
  Matrix& grad_of(int id);

  ParameterStore* store_;
  std::vector<Node> nodes_;
  std::vector<int> param_cache_;
  struct FrozenEntry {
    const ParameterStore* store;
    ParameterStore::Handle handle;
    int id;
  };
  std::vector<FrozenEntry> frozen_cache_;
};

}  // namespace tempme::nn
