#include "padel/tape.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace padel {

namespace {

[[noreturn]] void shape_error(const char* op, const Tensor& a,
                              const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " +
                              a.shape_str() + " vs " + b.shape_str());
}

void check_finite(const char* op, const Tensor& t) {
  if (!all_finite(t))
    throw std::runtime_error(std::string(op) + ": non-finite result");
}

double sigmoid_scalar(double x) {
  return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                  : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

Tape::Var Tape::record(Tensor value, bool requires_grad,
                       std::function<void(Tape&)> backprop) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tape::Node& Tape::node(Var v) {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("Tape: invalid var handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= static_cast<int>(nodes_.size()))
    throw std::invalid_argument("Tape: invalid var handle");
  return nodes_[static_cast<std::size_t>(v.id)];
}

Tensor& Tape::grad_buf(int id) {
  Node& n = nodes_[static_cast<std::size_t>(id)];
  if (n.grad.data.empty()) n.grad = Tensor(n.value.rows, n.value.cols);
  return n.grad;
}

void Tape::check_open(const char* op) const {
  if (closed_)
    throw std::runtime_error(std::string(op) +
                             ": tape already consumed by backward()");
}

Tape::Var Tape::leaf(const Tensor& value, bool requires_grad) {
  check_open("leaf");
  if (value.data.size() != value.rows * value.cols)
    throw std::invalid_argument("leaf: inconsistent tensor");
  check_finite("leaf", value);
  return record(value, requires_grad, {});
}

Tape::Var Tape::matmul(Var a, Var b) {
  check_open("matmul");
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (A.cols != B.rows) shape_error("matmul", A, B);
  Tensor C(A.rows, B.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t k = 0; k < A.cols; ++k) {
      const double aik = A.data[i * A.cols + k];
      if (aik == 0.0) continue;
      const double* brow = &B.data[k * B.cols];
      double* crow = &C.data[i * C.cols];
      for (std::size_t j = 0; j < B.cols; ++j) crow[j] += aik * brow[j];
    }
  check_finite("matmul", C);
  const bool rg = node(a).requires_grad || node(b).requires_grad;
  const int ai = a.id, bi = b.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, bi, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const Tensor& A2 = t.nodes_[ai].value;
      const Tensor& B2 = t.nodes_[bi].value;
      if (t.nodes_[ai].requires_grad) {
        Tensor& dA = t.grad_buf(ai);  // dA += G · Bᵀ
        for (std::size_t i = 0; i < dA.rows; ++i)
          for (std::size_t j = 0; j < dA.cols; ++j) {
            double s = 0.0;
            const double* grow = &G.data[i * G.cols];
            const double* brow = &B2.data[j * B2.cols];
            for (std::size_t k = 0; k < G.cols; ++k) s += grow[k] * brow[k];
            dA.data[i * dA.cols + j] += s;
          }
      }
      if (t.nodes_[bi].requires_grad) {
        Tensor& dB = t.grad_buf(bi);  // dB += Aᵀ · G
        for (std::size_t k = 0; k < A2.rows; ++k)
          for (std::size_t i = 0; i < A2.cols; ++i) {
            const double aki = A2.data[k * A2.cols + i];
            if (aki == 0.0) continue;
            const double* grow = &G.data[k * G.cols];
            double* drow = &dB.data[i * dB.cols];
            for (std::size_t j = 0; j < G.cols; ++j) drow[j] += aki * grow[j];
          }
      }
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::add(Var a, Var b) {
  check_open("add");
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (!A.same_shape(B)) shape_error("add", A, B);
  Tensor C = A;
  for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] += B.data[i];
  check_finite("add", C);
  const bool rg = node(a).requires_grad || node(b).requires_grad;
  const int ai = a.id, bi = b.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, bi, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      for (int src : {ai, bi}) {
        if (!t.nodes_[src].requires_grad) continue;
        Tensor& d = t.grad_buf(src);
        for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] += G.data[i];
      }
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::sub(Var a, Var b) {
  check_open("sub");
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (!A.same_shape(B)) shape_error("sub", A, B);
  Tensor C = A;
  for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] -= B.data[i];
  check_finite("sub", C);
  const bool rg = node(a).requires_grad || node(b).requires_grad;
  const int ai = a.id, bi = b.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, bi, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      if (t.nodes_[ai].requires_grad) {
        Tensor& d = t.grad_buf(ai);
        for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] += G.data[i];
      }
      if (t.nodes_[bi].requires_grad) {
        Tensor& d = t.grad_buf(bi);
        for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] -= G.data[i];
      }
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::row_broadcast_add(Var a, Var row) {
  check_open("row_broadcast_add");
  const Tensor& A = node(a).value;
  const Tensor& R = node(row).value;
  if (R.rows != 1 || R.cols != A.cols) shape_error("row_broadcast_add", A, R);
  Tensor C = A;
  for (std::size_t i = 0; i < C.rows; ++i)
    for (std::size_t j = 0; j < C.cols; ++j) C.at(i, j) += R.data[j];
  check_finite("row_broadcast_add", C);
  const bool rg = node(a).requires_grad || node(row).requires_grad;
  const int ai = a.id, ri = row.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, ri, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      if (t.nodes_[ai].requires_grad) {
        Tensor& d = t.grad_buf(ai);
        for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] += G.data[i];
      }
      if (t.nodes_[ri].requires_grad) {
        Tensor& d = t.grad_buf(ri);  // column sums
        for (std::size_t i = 0; i < G.rows; ++i)
          for (std::size_t j = 0; j < G.cols; ++j)
            d.data[j] += G.at(i, j);
      }
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::mul(Var a, Var b) {
  check_open("mul");
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (!A.same_shape(B)) shape_error("mul", A, B);
  Tensor C = A;
  for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] *= B.data[i];
  check_finite("mul", C);
  const bool rg = node(a).requires_grad || node(b).requires_grad;
  const int ai = a.id, bi = b.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, bi, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const Tensor& A2 = t.nodes_[ai].value;
      const Tensor& B2 = t.nodes_[bi].value;
      if (t.nodes_[ai].requires_grad) {
        Tensor& d = t.grad_buf(ai);
        for (std::size_t i = 0; i < d.data.size(); ++i)
          d.data[i] += G.data[i] * B2.data[i];
      }
      if (t.nodes_[bi].requires_grad) {
        Tensor& d = t.grad_buf(bi);
        for (std::size_t i = 0; i < d.data.size(); ++i)
          d.data[i] += G.data[i] * A2.data[i];
      }
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::div(Var a, Var b) {
  check_open("div");
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (!A.same_shape(B)) shape_error("div", A, B);
  Tensor C = A;
  for (std::size_t i = 0; i < C.data.size(); ++i) C.data[i] /= B.data[i];
  check_finite("div", C);
  const bool rg = node(a).requires_grad || node(b).requires_grad;
  const int ai = a.id, bi = b.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, bi, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const Tensor& A2 = t.nodes_[ai].value;
      const Tensor& B2 = t.nodes_[bi].value;
      if (t.nodes_[ai].requires_grad) {
        Tensor& d = t.grad_buf(ai);
        for (std::size_t i = 0; i < d.data.size(); ++i)
          d.data[i] += G.data[i] / B2.data[i];
      }
      if (t.nodes_[bi].requires_grad) {
        Tensor& d = t.grad_buf(bi);
        for (std::size_t i = 0; i < d.data.size(); ++i)
          d.data[i] -= G.data[i] * A2.data[i] / (B2.data[i] * B2.data[i]);
      }
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::scale(Var a, double s) {
  check_open("scale");
  Tensor C = node(a).value;
  for (double& v : C.data) v *= s;
  check_finite("scale", C);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, s, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < d.data.size(); ++i)
        d.data[i] += s * G.data[i];
    };
  return record(std::move(C), rg, std::move(bp));
}

// Elementwise unary ops share one recording path. The backward factor is
// computed from input x and output y.
Tape::Var Tape::relu(Var a) {
  check_open("relu");
  Tensor C = node(a).value;
  for (double& v : C.data) v = v > 0.0 ? v : 0.0;
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const Tensor& X = t.nodes_[ai].value;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < d.data.size(); ++i)
        if (X.data[i] > 0.0) d.data[i] += G.data[i];
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::sigmoid(Var a) {
  check_open("sigmoid");
  Tensor C = node(a).value;
  for (double& v : C.data) v = sigmoid_scalar(v);
  check_finite("sigmoid", C);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const Tensor& Y = t.nodes_[out].value;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < d.data.size(); ++i)
        d.data[i] += G.data[i] * Y.data[i] * (1.0 - Y.data[i]);
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::tanh(Var a) {
  check_open("tanh");
  Tensor C = node(a).value;
  for (double& v : C.data) v = std::tanh(v);
  check_finite("tanh", C);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const Tensor& Y = t.nodes_[out].value;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < d.data.size(); ++i)
        d.data[i] += G.data[i] * (1.0 - Y.data[i] * Y.data[i]);
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::exp(Var a) {
  check_open("exp");
  Tensor C = node(a).value;
  for (double& v : C.data) v = std::exp(v);
  check_finite("exp", C);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const Tensor& Y = t.nodes_[out].value;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < d.data.size(); ++i)
        d.data[i] += G.data[i] * Y.data[i];
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::log(Var a) {
  check_open("log");
  Tensor C = node(a).value;
  for (double& v : C.data) v = std::log(v);
  check_finite("log", C);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const Tensor& X = t.nodes_[ai].value;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < d.data.size(); ++i)
        d.data[i] += G.data[i] / X.data[i];
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::sqrt(Var a) {
  check_open("sqrt");
  Tensor C = node(a).value;
  for (double& v : C.data) v = std::sqrt(v);
  check_finite("sqrt", C);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const Tensor& Y = t.nodes_[out].value;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < d.data.size(); ++i)
        d.data[i] += G.data[i] * 0.5 / Y.data[i];
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::softplus(Var a) {
  check_open("softplus");
  Tensor C = node(a).value;
  for (double& v : C.data)
    v = v > 0.0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  check_finite("softplus", C);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const Tensor& X = t.nodes_[ai].value;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < d.data.size(); ++i)
        d.data[i] += G.data[i] * sigmoid_scalar(X.data[i]);
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::clamp(Var a, double lo, double hi) {
  check_open("clamp");
  if (!(lo <= hi)) throw std::invalid_argument("clamp: lo > hi");
  Tensor C = node(a).value;
  for (double& v : C.data) v = std::min(hi, std::max(lo, v));
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, lo, hi, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const Tensor& X = t.nodes_[ai].value;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < d.data.size(); ++i)
        if (X.data[i] >= lo && X.data[i] <= hi) d.data[i] += G.data[i];
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::concat_cols(Var a, Var b) {
  check_open("concat_cols");
  const Tensor& A = node(a).value;
  const Tensor& B = node(b).value;
  if (A.rows != B.rows) shape_error("concat_cols", A, B);
  Tensor C(A.rows, A.cols + B.cols);
  for (std::size_t i = 0; i < A.rows; ++i) {
    for (std::size_t j = 0; j < A.cols; ++j) C.at(i, j) = A.at(i, j);
    for (std::size_t j = 0; j < B.cols; ++j) C.at(i, A.cols + j) = B.at(i, j);
  }
  const bool rg = node(a).requires_grad || node(b).requires_grad;
  const int ai = a.id, bi = b.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, bi, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      const std::size_t ac = t.nodes_[ai].value.cols;
      if (t.nodes_[ai].requires_grad) {
        Tensor& d = t.grad_buf(ai);
        for (std::size_t i = 0; i < d.rows; ++i)
          for (std::size_t j = 0; j < d.cols; ++j)
            d.at(i, j) += G.at(i, j);
      }
      if (t.nodes_[bi].requires_grad) {
        Tensor& d = t.grad_buf(bi);
        for (std::size_t i = 0; i < d.rows; ++i)
          for (std::size_t j = 0; j < d.cols; ++j)
            d.at(i, j) += G.at(i, ac + j);
      }
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::slice_cols(Var a, std::size_t start, std::size_t count) {
  check_open("slice_cols");
  const Tensor& A = node(a).value;
  if (start + count > A.cols)
    throw std::invalid_argument("slice_cols: range out of bounds");
  Tensor C(A.rows, count);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < count; ++j) C.at(i, j) = A.at(i, start + j);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, start, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < G.rows; ++i)
        for (std::size_t j = 0; j < G.cols; ++j)
          d.at(i, start + j) += G.at(i, j);
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::slice_rows(Var a, const std::vector<std::size_t>& indices) {
  check_open("slice_rows");
  const Tensor& A = node(a).value;
  for (std::size_t r : indices)
    if (r >= A.rows)
      throw std::invalid_argument("slice_rows: row index out of bounds");
  Tensor C(indices.size(), A.cols);
  for (std::size_t i = 0; i < indices.size(); ++i)
    for (std::size_t j = 0; j < A.cols; ++j)
      C.at(i, j) = A.at(indices[i], j);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, indices, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < indices.size(); ++i)
        for (std::size_t j = 0; j < G.cols; ++j)
          d.at(indices[i], j) += G.at(i, j);
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::mean_rows(Var a) {
  check_open("mean_rows");
  const Tensor& A = node(a).value;
  if (A.rows == 0) throw std::invalid_argument("mean_rows: empty input");
  Tensor C(1, A.cols);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) C.data[j] += A.at(i, j);
  for (double& v : C.data) v /= static_cast<double>(A.rows);
  check_finite("mean_rows", C);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      Tensor& d = t.grad_buf(ai);
      const double inv = 1.0 / static_cast<double>(d.rows);
      for (std::size_t i = 0; i < d.rows; ++i)
        for (std::size_t j = 0; j < d.cols; ++j)
          d.at(i, j) += G.data[j] * inv;
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::sum_all(Var a) {
  check_open("sum_all");
  const Tensor& A = node(a).value;
  double s = 0.0;
  for (double v : A.data) s += v;
  Tensor C(1, 1, s);
  check_finite("sum_all", C);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, out](Tape& t) {
      const double g = t.nodes_[out].grad.data[0];
      Tensor& d = t.grad_buf(ai);
      for (double& v : d.data) v += g;
    };
  return record(std::move(C), rg, std::move(bp));
}

Tape::Var Tape::transpose(Var a) {
  check_open("transpose");
  const Tensor& A = node(a).value;
  Tensor C(A.cols, A.rows);
  for (std::size_t i = 0; i < A.rows; ++i)
    for (std::size_t j = 0; j < A.cols; ++j) C.at(j, i) = A.at(i, j);
  const bool rg = node(a).requires_grad;
  const int ai = a.id, out = static_cast<int>(nodes_.size());
  std::function<void(Tape&)> bp;
  if (rg)
    bp = [ai, out](Tape& t) {
      const Tensor& G = t.nodes_[out].grad;
      Tensor& d = t.grad_buf(ai);
      for (std::size_t i = 0; i < G.rows; ++i)
        for (std::size_t j = 0; j < G.cols; ++j)
          d.at(j, i) += G.at(i, j);
    };
  return record(std::move(C), rg, std::move(bp));
}

void Tape::backward(Var loss) {
  check_open("backward");
  const Node& L = node(loss);
  if (L.value.rows != 1 || L.value.cols != 1)
    throw std::invalid_argument("backward: loss must be 1x1, got " +
                                L.value.shape_str());
  if (!L.requires_grad)
    throw std::invalid_argument(
        "backward: loss is detached from every requires_grad leaf");
  closed_ = true;
  grad_buf(loss.id).data[0] = 1.0;
  // Reverse creation order is a valid reverse-topological order; nodes whose
  // grad was never touched are not on any path to the loss.
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.data.empty() || !n.backprop) continue;
    n.backprop(*this);
  }
}

const Tensor& Tape::grad(Var v) const {
  const Node& n = node(v);
  if (!closed_) throw std::runtime_error("grad: backward() not run yet");
  if (!n.requires_grad)
    throw std::invalid_argument("grad: var does not require grad");
  if (n.grad.data.empty()) {
    // Leaf never touched by the loss: zero gradient of matching shape.
    const_cast<Node&>(n).grad = Tensor(n.value.rows, n.value.cols);
  }
  return n.grad;
}

}  // namespace padel
