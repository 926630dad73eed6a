#include "tempme/nn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "tempme/error.hpp"

namespace tempme::nn {

Matrix::Matrix(std::size_t r, std::size_t c, std::vector<double> values)
    : rows(r), cols(c), data(std::move(values)) {
  if (data.size() != r * c) {
    throw ShapeError("matrix data size " + std::to_string(data.size()) + " != " +
                     std::to_string(r) + "x" + std::to_string(c));
  }
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::row(std::span<const double> values) {
  return Matrix(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

std::string Matrix::shape_str() const {
  return "(" + std::to_string(rows) + "x" + std::to_string(cols) + ")";
}

namespace {

[[noreturn]] void shape_fail(const char* op, const Matrix& a, const Matrix& b) {
  throw ShapeError(std::string(op) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

void require_same(const char* op, const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) shape_fail(op, a, b);
}

// out (+)= a * b
void gemm(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t n = a.rows, k = a.cols, m = b.cols;
  for (std::size_t i = 0; i < n; ++i) {
    double* o = out.data.data() + i * m;
    const double* ar = a.data.data() + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ar[p];
      if (av == 0.0) continue;
      const double* br = b.data.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
}

// out += a^T * b  (a: k x n, b: k x m, out: n x m)
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t k = a.rows, n = a.cols, m = b.cols;
  for (std::size_t p = 0; p < k; ++p) {
    const double* ar = a.data.data() + p * n;
    const double* br = b.data.data() + p * m;
    for (std::size_t i = 0; i < n; ++i) {
      const double av = ar[i];
      if (av == 0.0) continue;
      double* o = out.data.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) o[j] += av * br[j];
    }
  }
}

// out += a * b^T  (a: n x k, b: m x k, out: n x m)
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
  const std::size_t n = a.rows, k = a.cols, m = b.rows;
  for (std::size_t i = 0; i < n; ++i) {
    const double* ar = a.data.data() + i * k;
    double* o = out.data.data() + i * m;
    for (std::size_t j = 0; j < m; ++j) {
      const double* br = b.data.data() + j * k;
      double s = 0.0;
      for (std::size_t p = 0; p < k; ++p) s += ar[p] * br[p];
      o[j] += s;
    }
  }
}

}  // namespace

Var Tape::push(Matrix value, std::function<void(Tape&, int)> backward) {
  Node n;
  n.value = std::move(value);
  n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size() - 1)};
}

Matrix& Tape::grad_of(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.size() != n.value.size()) n.grad = Matrix(n.value.rows, n.value.cols, 0.0);
  return n.grad;
}

double Tape::item(Var v) const {
  const Matrix& m = value(v);
  if (m.size() != 1) throw ShapeError("item() on non-scalar " + m.shape_str());
  return m.data[0];
}

Var Tape::param(ParameterStore::Handle h) {
  if (!store_) throw InvariantError("Tape::param requires a parameter store");
  if (h < param_cache_.size() && param_cache_[h] >= 0) return Var{param_cache_[h]};
  const Parameter& p = (*store_)[h];
  Var v = push(Matrix(p.rows, p.cols, p.value));
  nodes_.back().param = static_cast<long>(h);
  if (param_cache_.size() <= h) param_cache_.resize(h + 1, -1);
  param_cache_[h] = v.id;
  return v;
}

Var Tape::param(const ParameterStore& store, ParameterStore::Handle h) {
  if (&store == store_) return param(h);
  for (const auto& f : frozen_cache_) {
    if (f.store == &store && f.handle == h) return Var{f.id};
  }
  Var v = constant(store.value(h));
  frozen_cache_.push_back({&store, h, v.id});
  return v;
}

Var Tape::constant(Matrix m) { return push(std::move(m)); }

void Tape::backward(Var out) {
  if (value(out).size() != 1) throw ShapeError("backward() needs a scalar output, got " + value(out).shape_str());
  grad_of(out.id).data[0] = 1.0;
  for (int i = out.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.grad.size() == 0) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param >= 0 && store_) {
      Parameter& p = (*store_)[static_cast<std::size_t>(n.param)];
      for (std::size_t k = 0; k < p.grad.size(); ++k) p.grad[k] += nodes_[static_cast<std::size_t>(i)].grad.data[k];
    }
  }
}

// ---------------------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  if (A.cols != B.rows) shape_fail("matmul", A, B);
  Matrix out(A.rows, B.cols, 0.0);
  gemm(A, B, out);
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    gemm_nt(g, t.value(b), t.grad_of(a.id));
    gemm_tn(t.value(a), g, t.grad_of(b.id));
  });
}

Var Tape::transpose(Var a) {
  const Matrix& A = value(a);
  Matrix out(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) out(j, i) = A(i, j);
  return push(std::move(out), [a](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t i = 0; i < ga.rows; ++i)
      for (std::size_t j = 0; j < ga.cols; ++j) ga(i, j) += g(j, i);
  });
}

Var Tape::add(Var a, Var b) {
  require_same("add", value(a), value(b));
  Matrix out = value(a);
  const Matrix& B = value(b);
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] += B.data[k];
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
    Matrix& gb = t.grad_of(b.id);
    for (std::size_t k = 0; k < g.size(); ++k) gb.data[k] += g.data[k];
  });
}

Var Tape::sub(Var a, Var b) {
  require_same("sub", value(a), value(b));
  Matrix out = value(a);
  const Matrix& B = value(b);
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] -= B.data[k];
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
    Matrix& gb = t.grad_of(b.id);
    for (std::size_t k = 0; k < g.size(); ++k) gb.data[k] -= g.data[k];
  });
}

Var Tape::mul(Var a, Var b) {
  require_same("mul", value(a), value(b));
  Matrix out = value(a);
  const Matrix& B = value(b);
  for (std::size_t k = 0; k < out.size(); ++k) out.data[k] *= B.data[k];
  return push(std::move(out), [a, b](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    {
      Matrix& ga = t.grad_of(a.id);
      const Matrix& bv = t.value(b);
      for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * bv.data[k];
    }
    Matrix& gb = t.grad_of(b.id);
    const Matrix& av = t.value(a);
    for (std::size_t k = 0; k < g.size(); ++k) gb.data[k] += g.data[k] * av.data[k];
  });
}

Var Tape::add_row(Var a, Var row) {
  const Matrix& A = value(a);
  const Matrix& R = value(row);
  if (R.rows != 1 || R.cols != A.cols) shape_fail("add_row", A, R);
  Matrix out = A;
  for (std::size_t i = 0; i < out.rows; ++i)
    for (std::size_t j = 0; j < out.cols; ++j) out(i, j) += R.data[j];
  return push(std::move(out), [a, row](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
    Matrix& gr = t.grad_of(row.id);
    for (std::size_t i = 0; i < g.rows; ++i)
      for (std::size_t j = 0; j < g.cols; ++j) gr.data[j] += g(i, j);
  });
}

Var Tape::mul_scalar(Var a, Var s) {
  const Matrix& S = value(s);
  if (S.size() != 1) shape_fail("mul_scalar", value(a), S);
  const double c = S.data[0];
  Matrix out = value(a);
  for (auto& x : out.data) x *= c;
  return push(std::move(out), [a, s](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const double c = t.value(s).data[0];
    const Matrix& av = t.value(a);
    double acc = 0.0;
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t k = 0; k < g.size(); ++k) {
      ga.data[k] += g.data[k] * c;
      acc += g.data[k] * av.data[k];
    }
    t.grad_of(s.id).data[0] += acc;
  });
}

Var Tape::scale(Var a, double c) {
  Matrix out = value(a);
  for (auto& x : out.data) x *= c;
  return push(std::move(out), [a, c](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * c;
  });
}

Var Tape::softplus(Var a) {
  Matrix out = value(a);
  for (auto& x : out.data) x = x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
  return push(std::move(out), [a](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& av = t.value(a);
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const double x = av.data[k];
      const double sig = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
      ga.data[k] += g.data[k] * sig;
    }
  });
}

Var Tape::add_const(Var a, double c) {
  Matrix out = value(a);
  for (auto& x : out.data) x += c;
  return push(std::move(out), [a](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k];
  });
}

Var Tape::relu(Var a) {
  Matrix out = value(a);
  for (auto& x : out.data) x = x > 0.0 ? x : 0.0;
  return push(std::move(out), [a](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& av = t.value(a);
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (av.data[k] > 0.0) ga.data[k] += g.data[k];
    }
  });
}

Var Tape::sigmoid(Var a) {
  Matrix out = value(a);
  for (auto& x : out.data) {
    x = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  return push(std::move(out), [a](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& y = t.nodes_[self].value;
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] * y.data[k] * (1.0 - y.data[k]);
  });
}

Var Tape::log(Var a) {
  Matrix out = value(a);
  for (auto& x : out.data) x = std::log(x);
  return push(std::move(out), [a](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& av = t.value(a);
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t k = 0; k < g.size(); ++k) ga.data[k] += g.data[k] / av.data[k];
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  Matrix out = value(a);
  for (auto& x : out.data) x = std::clamp(x, lo, hi);
  return push(std::move(out), [a, lo, hi](Tape& t, int self) {
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& av = t.value(a);
    Matrix& ga = t.grad_of(a.id);
    for (std::size_t k = 0; k < g.size(); ++k) {
      if (av.data[k] >= lo && av.data[k] <= hi) ga.data[k] += g.data[k];
    }
  });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  const std::size_t rows = value(parts[0]).rows;
  std::size_t cols = 0;
  for (Var p : parts) {
    if (value(p).rows != rows) shape_fail("concat_cols", value(parts[0]), value(p));
    cols += value(p).cols;
  }
  Matrix out(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Matrix& m = value(p);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < m.cols; ++j) out(i, off + j) = m(i, j);
    off += m.cols;
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return push(std::move(out), [saved](Tape& t, int self) {
    std::size_t off = 0;
    for (Var p : saved) {
      const std::size_t pc = t.value(p).cols;
      Matrix& gp = t.grad_of(p.id);
      const Matrix& g = t.nodes_[self].grad;
      for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < pc; ++j) gp(i, j) += g(i, off + j);
      off += pc;
    }
  });
}

Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ShapeError("concat_rows: no inputs");
  const std::size_t cols = value(parts[0]).cols;
  std::size_t rows = 0;
  for (Var p : parts) {
    if (value(p).cols != cols) shape_fail("concat_rows", value(parts[0]), value(p));
    rows += value(p).rows;
  }
  Matrix out(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Matrix& m = value(p);
    std::copy(m.data.begin(), m.data.end(), out.data.begin() + static_cast<long>(off * cols));
    off += m.rows;
  }
  std::vector<Var> saved(parts.begin(), parts.end());
  return push(std::move(out), [saved](Tape& t, int self) {
    std::size_t off = 0;
    for (Var p : saved) {
      Matrix& gp = t.grad_of(p.id);
      const Matrix& g = t.nodes_[self].grad;
      for (std::size_t k = 0; k < gp.size(); ++k) gp.data[k] += g.data[off * g.cols + k];
      off += gp.rows;
    }
  });
}

Var Tape::gather_rows(Var a, std::span<const int> index) {
  const Matrix& A = value(a);
  Matrix out(index.size(), A.cols);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto r = static_cast<std::size_t>(index[i]);
    if (r >= A.rows) throw ShapeError("gather_rows: index " + std::to_string(r) + " outside " + A.shape_str());
    std::copy_n(A.data.begin() + static_cast<long>(r * A.cols), A.cols,
                out.data.begin() + static_cast<long>(i * A.cols));
  }
  std::vector<int> idx(index.begin(), index.end());
  return push(std::move(out), [a, idx](Tape& t, int self) {
    Matrix& ga = t.grad_of(a.id);
    const Matrix& g = t.nodes_[self].grad;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto r = static_cast<std::size_t>(idx[i]);
      for (std::size_t j = 0; j < g.cols; ++j) ga(r, j) += g(i, j);
    }
  });
}

Var Tape::scatter_add_rows(Var a, std::span<const int> index, std::size_t out_rows) {
  const Matrix& A = value(a);
  if (index.size() != A.rows) throw ShapeError("scatter_add_rows: index length != rows of " + A.shape_str());
  Matrix out(out_rows, A.cols, 0.0);
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto r = static_cast<std::size_t>(index[i]);
    if (r >= out_rows) throw ShapeError("scatter_add_rows: target row out of range");
    for (std::size_t j = 0; j < A.cols; ++j) out(r, j) += A(i, j);
  }
  std::vector<int> idx(index.begin(), index.end());
  return push(std::move(out), [a, idx](Tape& t, int self) {
    Matrix& ga = t.grad_of(a.id);
    const Matrix& g = t.nodes_[self].grad;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const auto r = static_cast<std::size_t>(idx[i]);
      for (std::size_t j = 0; j < g.cols; ++j) ga(i, j) += g(r, j);
    }
  });
}

Var Tape::segment_mean_rows(Var a, std::span<const int> segment, std::size_t segments) {
  const Matrix& A = value(a);
  if (segment.size() != A.rows) throw ShapeError("segment_mean_rows: segment length != rows of " + A.shape_str());
  std::vector<double> count(segments, 0.0);
  for (int s : segment) count.at(static_cast<std::size_t>(s)) += 1.0;
  Matrix out(segments, A.cols, 0.0);
  for (std::size_t i = 0; i < segment.size(); ++i) {
    const auto s = static_cast<std::size_t>(segment[i]);
    for (std::size_t j = 0; j < A.cols; ++j) out(s, j) += A(i, j) / count[s];
  }
  std::vector<int> seg(segment.begin(), segment.end());
  return push(std::move(out), [a, seg, count](Tape& t, int self) {
    Matrix& ga = t.grad_of(a.id);
    const Matrix& g = t.nodes_[self].grad;
    for (std::size_t i = 0; i < seg.size(); ++i) {
      const auto s = static_cast<std::size_t>(seg[i]);
      for (std::size_t j = 0; j < g.cols; ++j) ga(i, j) += g(s, j) / count[s];
    }
  });
}

Var Tape::mean_rows(Var a) {
  const Matrix& A = value(a);
  if (A.rows == 0) throw ShapeError("mean_rows: empty input");
  Matrix out(1, A.cols, 0.0);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) out.data[j] += A(i, j);
  for (auto& x : out.data) x /= static_cast<double>(A.rows);
  return push(std::move(out), [a](Tape& t, int self) {
    Matrix& ga = t.grad_of(a.id);
    const Matrix& g = t.nodes_[self].grad;
    const double inv = 1.0 / static_cast<double>(ga.rows);
    for (std::size_t i = 0; i < ga.rows; ++i)
      for (std::size_t j = 0; j < ga.cols; ++j) ga(i, j) += g.data[j] * inv;
  });
}

Var Tape::sum(Var a) {
  double s = 0.0;
  for (double x : value(a).data) s += x;
  return push(Matrix(1, 1, s), [a](Tape& t, int self) {
    const double g = t.nodes_[self].grad.data[0];
    Matrix& ga = t.grad_of(a.id);
    for (auto& x : ga.data) x += g;
  });
}

Var Tape::segment_max(Var a, const std::vector<std::vector<int>>& groups) {
  const Matrix& A = value(a);
  if (A.cols != 1) throw ShapeError("segment_max: expected a column vector, got " + A.shape_str());
  Matrix out(groups.size(), 1, 0.0);
  std::vector<int> arg(groups.size(), -1);
  for (std::size_t gi = 0; gi < groups.size(); ++gi) {
    for (int r : groups[gi]) {
      if (static_cast<std::size_t>(r) >= A.rows) throw ShapeError("segment_max: member out of range");
      if (arg[gi] < 0 || A.data[static_cast<std::size_t>(r)] > out.data[gi]) {
        arg[gi] = r;
        out.data[gi] = A.data[static_cast<std::size_t>(r)];
      }
    }
  }
  return push(std::move(out), [a, arg](Tape& t, int self) {
    Matrix& ga = t.grad_of(a.id);
    const Matrix& g = t.nodes_[self].grad;
    for (std::size_t gi = 0; gi < arg.size(); ++gi) {
      if (arg[gi] >= 0) ga.data[static_cast<std::size_t>(arg[gi])] += g.data[gi];
    }
  });
}

Var Tape::weighted_softmax(Var scores, Var weights) {
  const Matrix& S = value(scores);
  const Matrix& W = value(weights);
  if (S.cols != 1 || !S.same_shape(W)) shape_fail("weighted_softmax", S, W);
  const std::size_t k = S.rows;
  Matrix out(k, 1, 0.0);
  std::vector<double> ex(k, 0.0);
  double z = 0.0;
  if (k > 0) {
    const double mx = *std::max_element(S.data.begin(), S.data.end());
    for (std::size_t i = 0; i < k; ++i) {
      ex[i] = std::exp(S.data[i] - mx);
      z += W.data[i] * ex[i];
    }
    if (z > 0.0) {
      for (std::size_t i = 0; i < k; ++i) out.data[i] = W.data[i] * ex[i] / z;
    }
  }
  return push(std::move(out), [scores, weights, ex, z](Tape& t, int self) {
    if (!(z > 0.0)) return;
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& y = t.nodes_[self].value;
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g.data[i] * y.data[i];
    {
      Matrix& gs = t.grad_of(scores.id);
      const Matrix& gg = t.nodes_[self].grad;
      const Matrix& yy = t.nodes_[self].value;
      for (std::size_t i = 0; i < gg.size(); ++i) gs.data[i] += yy.data[i] * (gg.data[i] - dot);
    }
    Matrix& gw = t.grad_of(weights.id);
    const Matrix& gg = t.nodes_[self].grad;
    for (std::size_t i = 0; i < gg.size(); ++i) gw.data[i] += ex[i] / z * (gg.data[i] - dot);
  });
}

Var Tape::time_encode(Var freq, std::span<const double> dt) {
  const Matrix& F = value(freq);
  if (F.rows != 1) throw ShapeError("time_encode: frequencies must be a row, got " + F.shape_str());
  const std::size_t d = F.cols;
  const double scale = std::sqrt(1.0 / static_cast<double>(d));
  Matrix out(dt.size(), 2 * d);
  for (std::size_t i = 0; i < dt.size(); ++i) {
    for (std::size_t k = 0; k < d; ++k) {
      const double arg = F.data[k] * dt[i];
      out(i, 2 * k) = scale * std::cos(arg);
      out(i, 2 * k + 1) = scale * std::sin(arg);
    }
  }
  std::vector<double> dts(dt.begin(), dt.end());
  return push(std::move(out), [freq, dts, scale](Tape& t, int self) {
    Matrix& gf = t.grad_of(freq.id);
    const Matrix& g = t.nodes_[self].grad;
    const Matrix& F = t.value(freq);
    for (std::size_t i = 0; i < dts.size(); ++i) {
      for (std::size_t k = 0; k < F.cols; ++k) {
        const double arg = F.data[k] * dts[i];
        gf.data[k] += scale * dts[i] * (-std::sin(arg) * g(i, 2 * k) + std::cos(arg) * g(i, 2 * k + 1));
      }
    }
  });
}

}  // namespace tempme::nn
