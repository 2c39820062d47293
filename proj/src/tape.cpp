#include "trajdiv/tape.hpp"

#include <cmath>
#include <cstring>
#include <stdexcept>

#include "trajdiv/kernels.hpp"

namespace trajdiv::ad {

namespace {

std::string shape_of(const DenseArray& a) { return a.shape_str(); }

}  // namespace

Var Tape::push(const char* op, DenseArray value, std::function<void(Tape&)> back) {
  try {
    value.check_finite();
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("op '") + op + "': " + e.what());
  }
  if (nodes_.size() >= UINT32_MAX - 1) throw std::runtime_error("tape overflow");
  Node n;
  n.grad = DenseArray(value.shape());
  n.value = std::move(value);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::leaf(DenseArray value) { return push("leaf", std::move(value), {}); }

void Tape::backward(Var root) {
  if (!root.valid() || root.idx >= nodes_.size()) throw std::invalid_argument("backward: invalid root");
  if (nodes_[root.idx].value.numel() != 1) {
    throw std::invalid_argument("backward: root must be scalar, got shape " +
                                nodes_[root.idx].value.shape_str());
  }
  for (auto& n : nodes_) n.grad.fill(0.0);
  nodes_[root.idx].grad[0] = 1.0;
  for (std::size_t i = root.idx + 1; i-- > 0;) {
    if (nodes_[i].back) nodes_[i].back(*this);
  }
}

void Tape::check_same_or_scalar(const char* op, Var a, Var b) const {
  const auto& va = value(a);
  const auto& vb = value(b);
  if (va.same_shape(vb) || va.numel() == 1 || vb.numel() == 1) return;
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + va.shape_str() + " vs " +
                              vb.shape_str());
}

namespace {

// out[i] = f(a[i], b[i]) with scalar broadcast on either side.
template <class F>
DenseArray broadcast_apply(const DenseArray& a, const DenseArray& b, F f) {
  const bool a_scalar = a.numel() == 1;
  const bool b_scalar = b.numel() == 1;
  const DenseArray& big = a_scalar ? b : a;
  std::vector<double> out(big.numel());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = f(a_scalar ? a[0] : a[i], b_scalar ? b[0] : b[i]);
  }
  return DenseArray(big.shape(), std::move(out));
}

// Accumulates g into target, reducing to a scalar if the operand was scalar.
void acc_broadcast(DenseArray& target, const DenseArray& g, double factor) {
  if (target.numel() == 1 && g.numel() > 1) {
    double s = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) s += g[i];
    target[0] += factor * s;
  } else {
    for (std::size_t i = 0; i < target.numel(); ++i) target[i] += factor * g[i];
  }
}

}  // namespace

Var Tape::add(Var a, Var b) {
  check_same_or_scalar("add", a, b);
  DenseArray out = broadcast_apply(value(a), value(b), [](double x, double y) { return x + y; });
  return push("add", std::move(out), [a, b, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    acc_broadcast(t.grad_mut(a), g, 1.0);
    acc_broadcast(t.grad_mut(b), g, 1.0);
  });
}

Var Tape::sub(Var a, Var b) {
  check_same_or_scalar("sub", a, b);
  DenseArray out = broadcast_apply(value(a), value(b), [](double x, double y) { return x - y; });
  return push("sub", std::move(out), [a, b, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    acc_broadcast(t.grad_mut(a), g, 1.0);
    acc_broadcast(t.grad_mut(b), g, -1.0);
  });
}

Var Tape::mul(Var a, Var b) {
  check_same_or_scalar("mul", a, b);
  DenseArray out = broadcast_apply(value(a), value(b), [](double x, double y) { return x * y; });
  return push("mul", std::move(out), [a, b, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    const auto& va = t.value(a);
    const auto& vb = t.value(b);
    auto& ga = t.grad_mut(a);
    auto& gb = t.grad_mut(b);
    const bool a_scalar = va.numel() == 1;
    const bool b_scalar = vb.numel() == 1;
    for (std::size_t i = 0; i < g.numel(); ++i) {
      const double gi = g[i];
      ga[a_scalar ? 0 : i] += gi * vb[b_scalar ? 0 : i];
      gb[b_scalar ? 0 : i] += gi * va[a_scalar ? 0 : i];
    }
  });
}

Var Tape::matmul(Var a, Var b) {
  const auto& va = value(a);
  const auto& vb = value(b);
  if (va.rank() != 2 || vb.rank() != 2 || va.cols() != vb.rows()) {
    throw std::invalid_argument("matmul: incompatible shapes " + shape_of(va) + " vs " + shape_of(vb));
  }
  const std::size_t m = va.rows(), k = va.cols(), n = vb.cols();
  DenseArray out({m, n});
  kernels::gemm_nn(va.data(), vb.data(), out.data(), m, k, n, workers_);
  return push("matmul", std::move(out), [a, b, m, k, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    kernels::gemm_nt_acc(g.data(), t.value(b).data(), t.grad_mut(a).data(), m, n, k, t.workers_);
    kernels::gemm_tn_acc(t.value(a).data(), g.data(), t.grad_mut(b).data(), m, k, n, t.workers_);
  });
}

Var Tape::sum(Var a) {
  const auto& va = value(a);
  double s = 0.0;
  for (std::size_t i = 0; i < va.numel(); ++i) s += va[i];
  return push("sum", DenseArray::scalar(s), [a, me = nodes_.size()](Tape& t) {
    const double g = t.nodes_[me].grad[0];
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g;
  });
}

Var Tape::mean(Var a) {
  const auto& va = value(a);
  const double inv = 1.0 / static_cast<double>(va.numel());
  double s = 0.0;
  for (std::size_t i = 0; i < va.numel(); ++i) s += va[i];
  return push("mean", DenseArray::scalar(s * inv), [a, inv, me = nodes_.size()](Tape& t) {
    const double g = t.nodes_[me].grad[0] * inv;
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g;
  });
}

Var Tape::sum_cols(Var a) {
  const auto& va = value(a);
  const std::size_t m = va.rows(), n = va.cols();
  std::vector<double> out(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i] += va[i * n + j];
  }
  return push("sum_cols", DenseArray({m, 1}, std::move(out)), [a, m, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[i];
    }
  });
}

Var Tape::sum_rows(Var a) {
  const auto& va = value(a);
  const std::size_t m = va.rows(), n = va.cols();
  std::vector<double> out(n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j] += va[i * n + j];
  }
  return push("sum_rows", DenseArray({1, n}, std::move(out)), [a, m, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j];
    }
  });
}

#define TRAJDIV_UNARY(NAME, FWD, BWD_EXPR)                                                     \
  Var Tape::NAME(Var a) {                                                                      \
    const auto& va = value(a);                                                                 \
    std::vector<double> out(va.numel());                                                       \
    for (std::size_t i = 0; i < out.size(); ++i) {                                             \
      const double x = va[i];                                                                  \
      out[i] = (FWD);                                                                          \
    }                                                                                          \
    return push(#NAME, DenseArray(va.shape(), std::move(out)), [a, me = nodes_.size()](Tape& t) { \
      const auto& g = t.nodes_[me].grad;                                                       \
      const auto& vx = t.value(a);                                                             \
      const auto& vy = t.nodes_[me].value;                                                     \
      (void)vx;                                                                                \
      (void)vy;                                                                                \
      auto& ga = t.grad_mut(a);                                                                \
      for (std::size_t i = 0; i < ga.numel(); ++i) {                                           \
        const double x = vx[i];                                                                \
        const double y = vy[i];                                                                \
        (void)x;                                                                               \
        (void)y;                                                                               \
        ga[i] += g[i] * (BWD_EXPR);                                                            \
      }                                                                                        \
    });                                                                                        \
  }

TRAJDIV_UNARY(square, x* x, 2.0 * x)
TRAJDIV_UNARY(exp, std::exp(x), y)
TRAJDIV_UNARY(log, std::log(x), 1.0 / x)
TRAJDIV_UNARY(tanh, std::tanh(x), 1.0 - y * y)
TRAJDIV_UNARY(sigmoid, 1.0 / (1.0 + std::exp(-x)), y*(1.0 - y))
TRAJDIV_UNARY(relu, x > 0.0 ? x : 0.0, x > 0.0 ? 1.0 : 0.0)
TRAJDIV_UNARY(rsqrt, 1.0 / std::sqrt(x), -0.5 * y * y * y)

#undef TRAJDIV_UNARY

Var Tape::sqrt(Var a) {
  const auto& va = value(a);
  std::vector<double> out(va.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sqrt(va[i]);
  return push("sqrt", DenseArray(va.shape(), std::move(out)), [a, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    const auto& y = t.nodes_[me].value;
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < ga.numel(); ++i) {
      if (y[i] > 0.0) ga[i] += g[i] * 0.5 / y[i];  // subgradient 0 at 0
    }
  });
}

Var Tape::leaky_relu(Var a, double slope) {
  const auto& va = value(a);
  std::vector<double> out(va.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] > 0.0 ? va[i] : slope * va[i];
  return push("leaky_relu", DenseArray(va.shape(), std::move(out)),
              [a, slope, me = nodes_.size()](Tape& t) {
                const auto& g = t.nodes_[me].grad;
                const auto& vx = t.value(a);
                auto& ga = t.grad_mut(a);
                for (std::size_t i = 0; i < ga.numel(); ++i) {
                  ga[i] += g[i] * (vx[i] > 0.0 ? 1.0 : slope);
                }
              });
}

Var Tape::clamp_min(Var a, double lo) {
  const auto& va = value(a);
  std::vector<double> out(va.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] < lo ? lo : va[i];
  return push("clamp_min", DenseArray(va.shape(), std::move(out)),
              [a, lo, me = nodes_.size()](Tape& t) {
                const auto& g = t.nodes_[me].grad;
                const auto& vx = t.value(a);
                auto& ga = t.grad_mut(a);
                for (std::size_t i = 0; i < ga.numel(); ++i) {
                  if (vx[i] > lo) ga[i] += g[i];
                }
              });
}

Var Tape::scale(Var a, double s) {
  const auto& va = value(a);
  std::vector<double> out(va.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * s;
  return push("scale", DenseArray(va.shape(), std::move(out)), [a, s, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g[i] * s;
  });
}

Var Tape::add_scalar(Var a, double s) {
  const auto& va = value(a);
  std::vector<double> out(va.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + s;
  return push("add_scalar", DenseArray(va.shape(), std::move(out)), [a, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g[i];
  });
}

Var Tape::concat_cols(const std::vector<Var>& vs) {
  if (vs.empty()) throw std::invalid_argument("concat_cols: empty input");
  const std::size_t m = value(vs[0]).rows();
  std::size_t n = 0;
  for (Var v : vs) {
    if (value(v).rows() != m) {
      throw std::invalid_argument("concat_cols: row mismatch " + value(vs[0]).shape_str() + " vs " +
                                  value(v).shape_str());
    }
    n += value(v).cols();
  }
  DenseArray out({m, n});
  std::size_t off = 0;
  for (Var v : vs) {
    const auto& a = value(v);
    for (std::size_t i = 0; i < m; ++i) {
      std::memcpy(out.data() + i * n + off, a.data() + i * a.cols(), a.cols() * sizeof(double));
    }
    off += a.cols();
  }
  return push("concat_cols", std::move(out), [vs, m, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    std::size_t off = 0;
    for (Var v : vs) {
      auto& ga = t.grad_mut(v);
      const std::size_t c = ga.cols();
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < c; ++j) ga[i * c + j] += g[i * n + off + j];
      }
      off += c;
    }
  });
}

Var Tape::concat_rows(const std::vector<Var>& vs) {
  if (vs.empty()) throw std::invalid_argument("concat_rows: empty input");
  const std::size_t n = value(vs[0]).cols();
  std::size_t m = 0;
  for (Var v : vs) {
    if (value(v).cols() != n) {
      throw std::invalid_argument("concat_rows: column mismatch " + value(vs[0]).shape_str() +
                                  " vs " + value(v).shape_str());
    }
    m += value(v).rows();
  }
  DenseArray out({m, n});
  std::size_t off = 0;
  for (Var v : vs) {
    const auto& a = value(v);
    std::memcpy(out.data() + off * n, a.data(), a.numel() * sizeof(double));
    off += a.rows();
  }
  return push("concat_rows", std::move(out), [vs, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    std::size_t off = 0;
    for (Var v : vs) {
      auto& ga = t.grad_mut(v);
      for (std::size_t i = 0; i < ga.numel(); ++i) ga[i] += g[off * n + i];
      off += ga.rows();
    }
  });
}

Var Tape::slice_cols(Var a, std::size_t start, std::size_t len) {
  const auto& va = value(a);
  if (start + len > va.cols() || len == 0) {
    throw std::invalid_argument("slice_cols: range [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") out of " + va.shape_str());
  }
  const std::size_t m = va.rows(), n = va.cols();
  DenseArray out({m, len});
  for (std::size_t i = 0; i < m; ++i) {
    std::memcpy(out.data() + i * len, va.data() + i * n + start, len * sizeof(double));
  }
  return push("slice_cols", std::move(out), [a, start, len, m, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < len; ++j) ga[i * n + start + j] += g[i * len + j];
    }
  });
}

Var Tape::slice_rows(Var a, std::size_t start, std::size_t len) {
  const auto& va = value(a);
  if (start + len > va.rows() || len == 0) {
    throw std::invalid_argument("slice_rows: range [" + std::to_string(start) + "," +
                                std::to_string(start + len) + ") out of " + va.shape_str());
  }
  const std::size_t n = va.cols();
  DenseArray out({len, n});
  std::memcpy(out.data(), va.data() + start * n, len * n * sizeof(double));
  return push("slice_rows", std::move(out), [a, start, len, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < len * n; ++i) ga[start * n + i] += g[i];
  });
}

Var Tape::transpose(Var a) {
  const auto& va = value(a);
  const std::size_t m = va.rows(), n = va.cols();
  DenseArray out({n, m});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = va[i * n + j];
  }
  return push("transpose", std::move(out), [a, m, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    auto& ga = t.grad_mut(a);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) ga[i * n + j] += g[j * m + i];
    }
  });
}

namespace {

void check_rowvec(const char* op, const DenseArray& a, const DenseArray& r) {
  if (r.rows() != 1 || r.cols() != a.cols()) {
    throw std::invalid_argument(std::string(op) + ": expected (1," + std::to_string(a.cols()) +
                                ") row vector, got " + r.shape_str());
  }
}

void check_colvec(const char* op, const DenseArray& a, const DenseArray& c) {
  if (c.cols() != 1 || c.rows() != a.rows()) {
    throw std::invalid_argument(std::string(op) + ": expected (" + std::to_string(a.rows()) +
                                ",1) column vector, got " + c.shape_str());
  }
}

}  // namespace

Var Tape::add_rowvec(Var a, Var row) {
  const auto& va = value(a);
  const auto& vr = value(row);
  check_rowvec("add_rowvec", va, vr);
  const std::size_t m = va.rows(), n = va.cols();
  DenseArray out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = va[i * n + j] + vr[j];
  }
  return push("add_rowvec", std::move(out), [a, row, m, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    auto& ga = t.grad_mut(a);
    auto& gr = t.grad_mut(row);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i * n + j];
        gr[j] += g[i * n + j];
      }
    }
  });
}

Var Tape::mul_rowvec(Var a, Var row) {
  const auto& va = value(a);
  const auto& vr = value(row);
  check_rowvec("mul_rowvec", va, vr);
  const std::size_t m = va.rows(), n = va.cols();
  DenseArray out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = va[i * n + j] * vr[j];
  }
  return push("mul_rowvec", std::move(out), [a, row, m, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    const auto& vx = t.value(a);
    const auto& vr2 = t.value(row);
    auto& ga = t.grad_mut(a);
    auto& gr = t.grad_mut(row);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i * n + j] * vr2[j];
        gr[j] += g[i * n + j] * vx[i * n + j];
      }
    }
  });
}

Var Tape::add_colvec(Var a, Var col) {
  const auto& va = value(a);
  const auto& vc = value(col);
  check_colvec("add_colvec", va, vc);
  const std::size_t m = va.rows(), n = va.cols();
  DenseArray out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = va[i * n + j] + vc[i];
  }
  return push("add_colvec", std::move(out), [a, col, m, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    auto& ga = t.grad_mut(a);
    auto& gc = t.grad_mut(col);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i * n + j];
        gc[i] += g[i * n + j];
      }
    }
  });
}

Var Tape::mul_colvec(Var a, Var col) {
  const auto& va = value(a);
  const auto& vc = value(col);
  check_colvec("mul_colvec", va, vc);
  const std::size_t m = va.rows(), n = va.cols();
  DenseArray out({m, n});
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = va[i * n + j] * vc[i];
  }
  return push("mul_colvec", std::move(out), [a, col, m, n, me = nodes_.size()](Tape& t) {
    const auto& g = t.nodes_[me].grad;
    const auto& vx = t.value(a);
    const auto& vc2 = t.value(col);
    auto& ga = t.grad_mut(a);
    auto& gc = t.grad_mut(col);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        ga[i * n + j] += g[i * n + j] * vc2[i];
        gc[i] += g[i * n + j] * vx[i * n + j];
      }
    }
  });
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  const std::size_t n = value(x).cols();
  const double inv_n = 1.0 / static_cast<double>(n);
  Var mu = scale(sum_cols(x), inv_n);                       // (m x 1)
  Var centered = add_colvec(x, scale(mu, -1.0));            // x - mu
  Var var = scale(sum_cols(square(centered)), inv_n);       // (m x 1)
  Var inv_std = rsqrt(add_scalar(var, eps));                // (m x 1)
  Var normed = mul_colvec(centered, inv_std);
  return add_rowvec(mul_rowvec(normed, gain), bias);
}

}  // namespace trajdiv::ad
