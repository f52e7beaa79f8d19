#pragma once

#include <vector>

#include "sengen/tensor.hpp"

namespace sengen {

// Handle to a node on a Tape.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape with eager forward evaluation. One tape per document;
// construction order is the topological order used by backward().
//
// Leaf nodes bind external (value, gradient) storage so that backward()
// accumulates parameter gradients in place.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // -- graph inputs ---------------------------------------------------------
  Var leaf(const Tensor* value, Tensor* grad_sink);
  Var input(Tensor value);  // constant, no gradient tracked

  // -- linear algebra -------------------------------------------------------
  Var matvec(Var W, Var x);            // W x
  Var affine(Var W, Var x, Var b);     // W x + b
  Var add(Var a, Var b);               // same shape
  Var sub(Var a, Var b);
  Var neg(Var a);
  Var scale(Var a, double c);
  Var scale_shift(Var a, double m, double c);  // m*a + c elementwise

  // -- elementwise ----------------------------------------------------------
  Var tanh_elem(Var a);
  Var sigmoid_elem(Var a);
  Var exp_elem(Var a);
  Var log_elem(Var a);
  Var hadamard(Var a, Var b);
  Var clamp(Var a, double lo, double hi);

  // -- softmax / reductions -------------------------------------------------
  // Max-stabilized log-softmax. With a support subset the result has one
  // entry per support index and normalizes over that subset only.
  Var log_softmax(Var x);
  Var log_softmax_subset(Var x, std::vector<int> support);
  Var sum(Var a);        // scalar
  Var dot(Var a, Var b); // scalar
  Var mul(Var a, Var b); // scalar * scalar
  Var add_many(const std::vector<Var>& terms);  // same-shape sum

  // -- lookups --------------------------------------------------------------
  Var row(Var table, int r);                        // embedding lookup
  Var rows_sum(Var table, std::vector<int> rows);   // sum of selected rows
  Var pick(Var v, int i);                           // scalar element
  Var concat(Var a, Var b);                         // vector concatenation

  // -- access ---------------------------------------------------------------
  const Tensor& value(Var v) const { return nodes_[v.id].val; }
  const Tensor& grad(Var v) const { return nodes_[v.id].grad; }
  int size() const { return (int)nodes_.size(); }

  // Reverse accumulation from a scalar root. Leaf sinks receive "+=".
  // Calling twice on the same tape is an error.
  void backward(Var root);

 private:
  enum class Op {
    Leaf, Input, MatVec, Affine, Add, Sub, Neg, ScaleShift,
    Tanh, Sigmoid, Exp, Log, Hadamard, Clamp,
    LogSoftmax, Sum, Dot, Mul, AddN, Row, RowsSum, Pick, Concat
  };

  struct Node {
    Op op;
    Tensor val;
    Tensor grad;
    std::vector<int> args;
    std::vector<int> idx;   // Row/Pick/RowsSum/LogSoftmax support
    double c0 = 0, c1 = 0;  // ScaleShift / Clamp constants
    Tensor* sink = nullptr; // Leaf only
  };

  int push(Node n);
  Node& at(Var v) { return nodes_[v.id]; }
  const Node& at(Var v) const { return nodes_[v.id]; }
  void check_same_shape(Var a, Var b, const char* what) const;
  void backward_node(int id);

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace sengen
