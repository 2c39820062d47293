#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "trajdiv/array.hpp"

namespace trajdiv::ad {

struct Var {
  std::uint32_t idx = UINT32_MAX;
  bool valid() const { return idx != UINT32_MAX; }
};

// Reverse-mode tape. Nodes are appended in creation order, which is already
// a topological order, so backward() is a single reverse sweep that touches
// each node exactly once. Values are immutable once created; only gradient
// buffers mutate during backward.
//
// Broadcasting rule for the elementwise binary ops (add/sub/mul): operands
// must have exactly the same shape, or one of them must be a scalar
// (numel == 1). Row/column broadcasts are separate, explicitly named ops
// (add_rowvec etc.).
class Tape {
 public:
  explicit Tape(int kernel_workers = 1) : workers_(kernel_workers) {}

  Var leaf(DenseArray value);
  // Alias for leaf; used where the gradient is never read (detached inputs).
  Var constant(DenseArray value) { return leaf(std::move(value)); }
  Var constant_scalar(double v) { return leaf(DenseArray::scalar(v)); }

  const DenseArray& value(Var v) const { return nodes_[v.idx].value; }
  const DenseArray& grad(Var v) const { return nodes_[v.idx].grad; }
  std::size_t node_count() const { return nodes_.size(); }
  int workers() const { return workers_; }

  // Seeds d(root)/d(root)=1 and accumulates gradients into every node
  // reachable from root. root must be scalar-valued.
  void backward(Var root);

  // Elementwise binary (exact shape or scalar broadcast).
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);

  Var matmul(Var a, Var b);

  Var sum(Var a);   // all elements -> scalar
  Var mean(Var a);  // -> scalar
  Var sum_cols(Var a);  // (m x n) -> (m x 1), row sums
  Var sum_rows(Var a);  // (m x n) -> (1 x n), column sums

  Var square(Var a);
  Var sqrt(Var a);   // subgradient 0 at x == 0
  Var rsqrt(Var a);  // 1/sqrt(x)
  Var exp(Var a);
  Var log(Var a);
  Var tanh(Var a);
  Var sigmoid(Var a);
  Var relu(Var a);
  Var leaky_relu(Var a, double slope);
  Var clamp_min(Var a, double lo);

  Var scale(Var a, double s);
  Var add_scalar(Var a, double s);

  Var concat_cols(const std::vector<Var>& vs);
  Var concat_rows(const std::vector<Var>& vs);
  Var slice_cols(Var a, std::size_t start, std::size_t len);
  Var slice_rows(Var a, std::size_t start, std::size_t len);
  Var transpose(Var a);

  // Row/column broadcasts: (m x n) op (1 x n) / (m x 1).
  Var add_rowvec(Var a, Var row);
  Var mul_rowvec(Var a, Var row);
  Var add_colvec(Var a, Var col);
  Var mul_colvec(Var a, Var col);

  // x*w + b with b broadcast over rows.
  Var affine(Var x, Var w, Var b) { return add_rowvec(matmul(x, w), b); }

  // Feature standardization per row with learned gain/bias; behaves
  // identically in training and evaluation (no batch statistics).
  Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);

 private:
  struct Node {
    DenseArray value;
    DenseArray grad;
    std::function<void(Tape&)> back;  // empty for leaves
  };

  Var push(const char* op, DenseArray value, std::function<void(Tape&)> back);
  DenseArray& grad_mut(Var v) { return nodes_[v.idx].grad; }
  void check_same_or_scalar(const char* op, Var a, Var b) const;

  std::vector<Node> nodes_;
  int workers_ = 1;

  friend struct TapeAccess;
};

// Test hook: lets oracles read node internals without widening the API.
struct TapeAccess {
  static DenseArray& grad(Tape& t, Var v) { return t.grad_mut(v); }
};

}  // namespace trajdiv::ad
