#include "sengen/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sengen {

int Tape::push(Node n) {
#ifndef NDEBUG
  if (!n.val.all_finite())
    throw std::runtime_error("non-finite value produced on tape (node " +
                             std::to_string(nodes_.size()) + ")");
#endif
  nodes_.push_back(std::move(n));
  return (int)nodes_.size() - 1;
}

void Tape::check_same_shape(Var a, Var b, const char* what) const {
  if (at(a).val.shape != at(b).val.shape)
    throw std::invalid_argument(std::string(what) + ": shape mismatch " +
                                shape_str(at(a).val.shape) + " vs " +
                                shape_str(at(b).val.shape));
}

Var Tape::leaf(const Tensor* value, Tensor* grad_sink) {
  Node n;
  n.op = Op::Leaf;
  n.val = *value;
  n.sink = grad_sink;
  return {push(std::move(n))};
}

Var Tape::input(Tensor value) {
  Node n;
  n.op = Op::Input;
  n.val = std::move(value);
  return {push(std::move(n))};
}

Var Tape::matvec(Var W, Var x) {
  const Tensor& w = at(W).val;
  const Tensor& v = at(x).val;
  if (w.shape.size() != 2 || w.cols() != v.size())
    throw std::invalid_argument("matvec: shape mismatch " + shape_str(w.shape) +
                                " vs " + shape_str(v.shape));
  Node n;
  n.op = Op::MatVec;
  n.args = {W.id, x.id};
  n.val = Tensor({w.rows()});
  for (int r = 0; r < w.rows(); ++r) {
    double acc = 0;
    for (int c = 0; c < w.cols(); ++c) acc += w.at(r, c) * v[c];
    n.val[r] = acc;
  }
  return {push(std::move(n))};
}

Var Tape::affine(Var W, Var x, Var b) {
  Var wx = matvec(W, x);
  check_same_shape(wx, b, "affine");
  Node n;
  n.op = Op::Affine;
  n.args = {wx.id, b.id};
  n.val = at(wx).val;
  for (int i = 0; i < n.val.size(); ++i) n.val[i] += at(b).val[i];
  return {push(std::move(n))};
}

Var Tape::add(Var a, Var b) {
  check_same_shape(a, b, "add");
  Node n;
  n.op = Op::Add;
  n.args = {a.id, b.id};
  n.val = at(a).val;
  for (int i = 0; i < n.val.size(); ++i) n.val[i] += at(b).val[i];
  return {push(std::move(n))};
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(a, b, "sub");
  Node n;
  n.op = Op::Sub;
  n.args = {a.id, b.id};
  n.val = at(a).val;
  for (int i = 0; i < n.val.size(); ++i) n.val[i] -= at(b).val[i];
  return {push(std::move(n))};
}

Var Tape::neg(Var a) { return scale_shift(a, -1.0, 0.0); }
Var Tape::scale(Var a, double c) { return scale_shift(a, c, 0.0); }

Var Tape::scale_shift(Var a, double m, double c) {
  Node n;
  n.op = Op::ScaleShift;
  n.args = {a.id};
  n.c0 = m;
  n.c1 = c;
  n.val = at(a).val;
  for (double& v : n.val.data) v = m * v + c;
  return {push(std::move(n))};
}

Var Tape::tanh_elem(Var a) {
  Node n;
  n.op = Op::Tanh;
  n.args = {a.id};
  n.val = at(a).val;
  for (double& v : n.val.data) v = std::tanh(v);
  return {push(std::move(n))};
}

Var Tape::sigmoid_elem(Var a) {
  Node n;
  n.op = Op::Sigmoid;
  n.args = {a.id};
  n.val = at(a).val;
  for (double& v : n.val.data) v = 1.0 / (1.0 + std::exp(-v));
  return {push(std::move(n))};
}

Var Tape::exp_elem(Var a) {
  Node n;
  n.op = Op::Exp;
  n.args = {a.id};
  n.val = at(a).val;
  for (double& v : n.val.data) v = std::exp(v);
  return {push(std::move(n))};
}

Var Tape::log_elem(Var a) {
  Node n;
  n.op = Op::Log;
  n.args = {a.id};
  n.val = at(a).val;
  for (double& v : n.val.data) v = std::log(v);
  return {push(std::move(n))};
}

Var Tape::hadamard(Var a, Var b) {
  check_same_shape(a, b, "hadamard");
  Node n;
  n.op = Op::Hadamard;
  n.args = {a.id, b.id};
  n.val = at(a).val;
  for (int i = 0; i < n.val.size(); ++i) n.val[i] *= at(b).val[i];
  return {push(std::move(n))};
}

Var Tape::clamp(Var a, double lo, double hi) {
  Node n;
  n.op = Op::Clamp;
  n.args = {a.id};
  n.c0 = lo;
  n.c1 = hi;
  n.val = at(a).val;
  for (double& v : n.val.data) v = std::min(hi, std::max(lo, v));
  return {push(std::move(n))};
}

Var Tape::log_softmax(Var x) {
  std::vector<int> full(at(x).val.size());
  for (int i = 0; i < (int)full.size(); ++i) full[i] = i;
  return log_softmax_subset(x, std::move(full));
}

Var Tape::log_softmax_subset(Var x, std::vector<int> support) {
  if (support.empty()) throw std::invalid_argument("log_softmax: empty support");
  const Tensor& v = at(x).val;
  Node n;
  n.op = Op::LogSoftmax;
  n.args = {x.id};
  n.val = Tensor({(int)support.size()});
  double mx = v[support[0]];
  for (int i : support) mx = std::max(mx, v[i]);
  double z = 0;
  for (int i : support) z += std::exp(v[i] - mx);
  double lse = mx + std::log(z);
  for (size_t j = 0; j < support.size(); ++j) n.val[(int)j] = v[support[j]] - lse;
  n.idx = std::move(support);
  return {push(std::move(n))};
}

Var Tape::sum(Var a) {
  Node n;
  n.op = Op::Sum;
  n.args = {a.id};
  double acc = 0;
  for (double v : at(a).val.data) acc += v;
  n.val = Tensor::scalar(acc);
  return {push(std::move(n))};
}

Var Tape::dot(Var a, Var b) {
  check_same_shape(a, b, "dot");
  Node n;
  n.op = Op::Dot;
  n.args = {a.id, b.id};
  double acc = 0;
  for (int i = 0; i < at(a).val.size(); ++i) acc += at(a).val[i] * at(b).val[i];
  n.val = Tensor::scalar(acc);
  return {push(std::move(n))};
}

Var Tape::mul(Var a, Var b) {
  if (at(a).val.size() != 1 || at(b).val.size() != 1)
    throw std::invalid_argument("mul: scalar operands required");
  Node n;
  n.op = Op::Mul;
  n.args = {a.id, b.id};
  n.val = Tensor::scalar(at(a).val[0] * at(b).val[0]);
  return {push(std::move(n))};
}

Var Tape::add_many(const std::vector<Var>& terms) {
  if (terms.empty()) throw std::invalid_argument("add_many: no terms");
  Node n;
  n.op = Op::AddN;
  n.val = at(terms[0]).val;
  n.args = {terms[0].id};
  for (size_t i = 1; i < terms.size(); ++i) {
    check_same_shape(terms[0], terms[i], "add_many");
    for (int j = 0; j < n.val.size(); ++j) n.val[j] += at(terms[i]).val[j];
    n.args.push_back(terms[i].id);
  }
  return {push(std::move(n))};
}

Var Tape::row(Var table, int r) {
  const Tensor& t = at(table).val;
  if (t.shape.size() != 2 || r < 0 || r >= t.rows())
    throw std::out_of_range("row: index " + std::to_string(r) + " out of range for " +
                            shape_str(t.shape));
  Node n;
  n.op = Op::Row;
  n.args = {table.id};
  n.idx = {r};
  n.val = Tensor({t.cols()});
  for (int c = 0; c < t.cols(); ++c) n.val[c] = t.at(r, c);
  return {push(std::move(n))};
}

Var Tape::rows_sum(Var table, std::vector<int> rows) {
  const Tensor& t = at(table).val;
  if (rows.empty()) throw std::invalid_argument("rows_sum: no rows");
  Node n;
  n.op = Op::RowsSum;
  n.args = {table.id};
  n.val = Tensor({t.cols()});
  for (int r : rows) {
    if (r < 0 || r >= t.rows()) throw std::out_of_range("rows_sum: row out of range");
    for (int c = 0; c < t.cols(); ++c) n.val[c] += t.at(r, c);
  }
  n.idx = std::move(rows);
  return {push(std::move(n))};
}

Var Tape::pick(Var v, int i) {
  const Tensor& t = at(v).val;
  if (i < 0 || i >= t.size()) throw std::out_of_range("pick: index out of range");
  Node n;
  n.op = Op::Pick;
  n.args = {v.id};
  n.idx = {i};
  n.val = Tensor::scalar(t[i]);
  return {push(std::move(n))};
}

Var Tape::concat(Var a, Var b) {
  Node n;
  n.op = Op::Concat;
  n.args = {a.id, b.id};
  n.val = Tensor({at(a).val.size() + at(b).val.size()});
  int k = 0;
  for (double v : at(a).val.data) n.val[k++] = v;
  for (double v : at(b).val.data) n.val[k++] = v;
  return {push(std::move(n))};
}

void Tape::backward(Var root) {
  if (backward_done_)
    throw std::logic_error("backward called twice on the same tape");
  if (at(root).val.size() != 1)
    throw std::invalid_argument("backward: root must be scalar, got " +
                                shape_str(at(root).val.shape));
  backward_done_ = true;
  for (Node& n : nodes_) n.grad = Tensor(n.val.shape);
  nodes_[root.id].grad[0] = 1.0;
  for (int id = root.id; id >= 0; --id) backward_node(id);
}

void Tape::backward_node(int id) {
  Node& n = nodes_[id];
  const Tensor& g = n.grad;
  auto A = [&](int k) -> Node& { return nodes_[n.args[k]]; };
  switch (n.op) {
    case Op::Leaf:
      if (n.sink) {
        for (int i = 0; i < g.size(); ++i) n.sink->data[i] += g[i];
      }
      break;
    case Op::Input:
      break;
    case Op::MatVec: {
      Node& W = A(0);
      Node& x = A(1);
      int R = W.val.rows(), C = W.val.cols();
      for (int r = 0; r < R; ++r)
        for (int c = 0; c < C; ++c) {
          W.grad.at(r, c) += g[r] * x.val[c];
          x.grad[c] += W.val.at(r, c) * g[r];
        }
      break;
    }
    case Op::Affine:
    case Op::Add:
      for (int i = 0; i < g.size(); ++i) {
        A(0).grad[i] += g[i];
        A(1).grad[i] += g[i];
      }
      break;
    case Op::Sub:
      for (int i = 0; i < g.size(); ++i) {
        A(0).grad[i] += g[i];
        A(1).grad[i] -= g[i];
      }
      break;
    case Op::ScaleShift:
      for (int i = 0; i < g.size(); ++i) A(0).grad[i] += n.c0 * g[i];
      break;
    case Op::Tanh:
      for (int i = 0; i < g.size(); ++i)
        A(0).grad[i] += g[i] * (1.0 - n.val[i] * n.val[i]);
      break;
    case Op::Sigmoid:
      for (int i = 0; i < g.size(); ++i)
        A(0).grad[i] += g[i] * n.val[i] * (1.0 - n.val[i]);
      break;
    case Op::Exp:
      for (int i = 0; i < g.size(); ++i) A(0).grad[i] += g[i] * n.val[i];
      break;
    case Op::Log:
      for (int i = 0; i < g.size(); ++i) A(0).grad[i] += g[i] / A(0).val[i];
      break;
    case Op::Hadamard:
      for (int i = 0; i < g.size(); ++i) {
        A(0).grad[i] += g[i] * A(1).val[i];
        A(1).grad[i] += g[i] * A(0).val[i];
      }
      break;
    case Op::Clamp:
      for (int i = 0; i < g.size(); ++i) {
        double v = A(0).val[i];
        if (v > n.c0 && v < n.c1) A(0).grad[i] += g[i];
      }
      break;
    case Op::LogSoftmax: {
      // dx_j = g_j - softmax(x)_j * sum(g), over the support only
      double gsum = 0;
      for (int i = 0; i < g.size(); ++i) gsum += g[i];
      for (int j = 0; j < (int)n.idx.size(); ++j)
        A(0).grad[n.idx[j]] += g[j] - std::exp(n.val[j]) * gsum;
      break;
    }
    case Op::Sum:
      for (int i = 0; i < A(0).grad.size(); ++i) A(0).grad[i] += g[0];
      break;
    case Op::Dot:
      for (int i = 0; i < A(0).grad.size(); ++i) {
        A(0).grad[i] += g[0] * A(1).val[i];
        A(1).grad[i] += g[0] * A(0).val[i];
      }
      break;
    case Op::Mul:
      A(0).grad[0] += g[0] * A(1).val[0];
      A(1).grad[0] += g[0] * A(0).val[0];
      break;
    case Op::AddN:
      for (int a : n.args)
        for (int i = 0; i < g.size(); ++i) nodes_[a].grad[i] += g[i];
      break;
    case Op::Row:
      for (int c = 0; c < g.size(); ++c) A(0).grad.at(n.idx[0], c) += g[c];
      break;
    case Op::RowsSum:
      for (int r : n.idx)
        for (int c = 0; c < g.size(); ++c) A(0).grad.at(r, c) += g[c];
      break;
    case Op::Pick:
      A(0).grad[n.idx[0]] += g[0];
      break;
    case Op::Concat: {
      int na = A(0).grad.size();
      for (int i = 0; i < na; ++i) A(0).grad[i] += g[i];
      for (int i = 0; i < A(1).grad.size(); ++i) A(1).grad[i] += g[na + i];
      break;
    }
  }
}

}  // namespace sengen
