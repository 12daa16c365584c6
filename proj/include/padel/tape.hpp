#pragma once

#include <deque>
#include <functional>
#include <vector>

#include "padel/tensor.hpp"

namespace padel {

// Reverse-mode gradient tape over dense Tensors. Define-by-run: a Tape is
// built fresh for every forward pass, consumed by one backward() call, and
// then discarded. Recording order is topological by construction. A tape is
// single-threaded; independent tapes may run on different threads.
//
// Every forward result is checked for NaN/Inf and trips an error if found.
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves. Gradients are available for requires_grad leaves after backward().
  Var leaf(const Tensor& value, bool requires_grad);
  Var constant(Tensor value) { return record(std::move(value), false, {}); }
  Var scalar(double v) { return constant(Tensor(1, 1, v)); }

  // Core ops. Results are recorded with backward rules whenever any input
  // requires grad.
  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var row_broadcast_add(Var a, Var row);  // a: n×c, row: 1×c
  Var mul(Var a, Var b);                  // pointwise
  Var div(Var a, Var b);                  // pointwise
  Var scale(Var a, double s);
  Var relu(Var a);
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);
  Var sqrt(Var a);
  Var softplus(Var a);  // log(1+e^x), stable for large |x|
  Var clamp(Var a, double lo, double hi);
  Var concat_cols(Var a, Var b);
  Var slice_cols(Var a, std::size_t start, std::size_t count);
  // Row gather; indices may repeat, backward scatter-adds.
  Var slice_rows(Var a, const std::vector<std::size_t>& indices);
  Var mean_rows(Var a);  // n×c -> 1×c
  Var sum_all(Var a);    // n×c -> 1×1
  Var transpose(Var a);

  const Tensor& value(Var v) const { return node(v).value; }
  bool requires_grad(Var v) const { return node(v).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Runs reverse accumulation from a 1×1 loss. Clears the tape for further
  // recording; gradients stay readable via grad().
  void backward(Var loss);
  const Tensor& grad(Var v) const;

 private:
  struct Node {
    Tensor value;
    Tensor grad;  // allocated on first touch during backward
    bool requires_grad = false;
    std::function<void(Tape&)> backprop;  // empty for leaves/constants
  };

  Var record(Tensor value, bool requires_grad,
             std::function<void(Tape&)> backprop);
  Node& node(Var v);
  const Node& node(Var v) const;
  Tensor& grad_buf(int id);  // ensures allocation, zero-filled
  void check_open(const char* op) const;

  // Deque keeps references from value()/grad() stable while ops keep
  // recording.
  std::deque<Node> nodes_;
  bool closed_ = false;
};

}  // namespace padel
