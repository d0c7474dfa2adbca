#pragma once

#include <functional>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "voclip/eager.hpp"
#include "voclip/kernels.hpp"
#include "voclip/tensor.hpp"

// Reverse-mode autodiff on a tape of primitive ops. Nodes are appended in
// creation order (which is a topological order); backward sweeps the tape in
// reverse and visits each node once. Forward values come from the shared
// eager:: functions; all gradient accumulation happens in a fixed index
// order, so results are bitwise reproducible.

namespace voclip {

struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v) : name(std::move(n)), value(std::move(v)) {
    grad = Tensor<T>::zeros(value.shape);
  }

  void zero_grad() {
    for (auto& g : grad.data) g = T(0);
  }
};

template <typename T>
class Graph {
 public:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    bool requires_grad = false;
    Parameter<T>* param = nullptr;
    std::function<void(Graph&)> backward;
  };

  /// When set, every op output is scanned and a non-finite entry raises.
  bool check_finite = true;

  Var leaf(Tensor<T> value, bool requires_grad = false) {
    Node n;
    n.value = std::move(value);
    n.requires_grad = requires_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Var param(Parameter<T>& p) {
    Var v = leaf(p.value, true);
    nodes_[static_cast<std::size_t>(v.id)].param = &p;
    return v;
  }

  Var constant(Tensor<T> value) { return leaf(std::move(value), false); }

  Var make(const char* op, Tensor<T> value, std::initializer_list<Var> parents,
           std::function<void(Graph&)> bwd) {
    return make_vec(op, std::move(value), std::vector<Var>(parents), std::move(bwd));
  }

  Var make_vec(const char* op, Tensor<T> value, const std::vector<Var>& parents,
               std::function<void(Graph&)> bwd) {
    if (check_finite && !value.all_finite()) {
      throw std::runtime_error(std::string("non-finite value produced by op '") + op + "'");
    }
    Node n;
    n.value = std::move(value);
    for (Var p : parents) {
      if (node(p).requires_grad) {
        n.requires_grad = true;
        break;
      }
    }
    if (n.requires_grad) n.backward = std::move(bwd);
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  Node& node(Var v) { return nodes_[static_cast<std::size_t>(v.id)]; }
  const Node& node(Var v) const { return nodes_[static_cast<std::size_t>(v.id)]; }

  const Tensor<T>& val(Var v) const { return node(v).value; }
  const Tensor<T>& grad(Var v) const { return node(v).grad; }

  bool needs(Var v) const { return node(v).requires_grad; }

  /// Gradient buffer of v, or nullptr when v does not require gradients.
  Tensor<T>* grad_sink(Var v) {
    Node& n = node(v);
    return n.requires_grad ? &n.grad : nullptr;
  }

  /// Reverse sweep from a scalar root. Populates node gradients and then
  /// accumulates leaf gradients into their Parameters in node order.
  void backward(Var root) {
    if (val(root).numel() != 1) {
      throw std::invalid_argument("backward: root must be a scalar, got shape " + shape_str(val(root).shape));
    }
    const int root_id = root.id;
    for (int id = 0; id <= root_id; ++id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.requires_grad) n.grad = Tensor<T>::zeros(n.value.shape);
    }
    if (!node(root).requires_grad) return;  // no parameters reachable
    node(root).grad.data[0] = T(1);
    for (int id = root_id; id >= 0; --id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.requires_grad && n.backward) n.backward(*this);
    }
    for (int id = 0; id <= root_id; ++id) {
      Node& n = nodes_[static_cast<std::size_t>(id)];
      if (n.param != nullptr) {
        auto& dst = n.param->grad.data;
        const auto& src = n.grad.data;
        for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
      }
    }
  }

  std::size_t size() const { return nodes_.size(); }
  void clear() { nodes_.clear(); }

 private:
  std::vector<Node> nodes_;
};

// ---- elementwise ----

template <typename T>
Var add(Graph<T>& g, Var a, Var b) {
  int oid = static_cast<int>(g.size());
  return g.make("add", eager::add(g.val(a), g.val(b)), {a, b}, [a, b, oid](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) kernels::axpy(go.ptr(), T(1), ga->ptr(), go.numel());
    if (auto* gb = gr.grad_sink(b)) kernels::axpy(go.ptr(), T(1), gb->ptr(), go.numel());
  });
}

template <typename T>
Var sub(Graph<T>& g, Var a, Var b) {
  int oid = static_cast<int>(g.size());
  return g.make("sub", eager::sub(g.val(a), g.val(b)), {a, b}, [a, b, oid](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) kernels::axpy(go.ptr(), T(1), ga->ptr(), go.numel());
    if (auto* gb = gr.grad_sink(b)) kernels::axpy(go.ptr(), T(-1), gb->ptr(), go.numel());
  });
}

template <typename T>
Var mul(Graph<T>& g, Var a, Var b) {
  int oid = static_cast<int>(g.size());
  return g.make("mul", eager::mul(g.val(a), g.val(b)), {a, b}, [a, b, oid](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    const std::int64_t n = go.numel();
    if (auto* ga = gr.grad_sink(a)) {
      const auto& bval = gr.val(b);
      for (std::int64_t i = 0; i < n; ++i) ga->data[i] += go.data[i] * bval.data[i];
    }
    if (auto* gb = gr.grad_sink(b)) {
      const auto& aval = gr.val(a);
      for (std::int64_t i = 0; i < n; ++i) gb->data[i] += go.data[i] * aval.data[i];
    }
  });
}

template <typename T>
Var scale(Graph<T>& g, Var a, T s) {
  int oid = static_cast<int>(g.size());
  return g.make("scale", eager::scale(g.val(a), s), {a}, [a, s, oid](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) kernels::axpy(go.ptr(), s, ga->ptr(), go.numel());
  });
}

template <typename T>
Var gelu(Graph<T>& g, Var a) {
  int oid = static_cast<int>(g.size());
  return g.make("gelu", eager::gelu(g.val(a)), {a}, [a, oid](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) {
      kernels::gelu_grad(gr.val(a).ptr(), go.ptr(), ga->ptr(), go.numel());
    }
  });
}

// ---- broadcast over rows (last dim must match the vector) ----

template <typename T>
Var add_rowvec(Graph<T>& g, Var x, Var v) {
  int oid = static_cast<int>(g.size());
  return g.make("add_rowvec", eager::add_rowvec(g.val(x), g.val(v)), {x, v}, [x, v, oid](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    const std::int64_t cols = gr.val(x).cols();
    const std::int64_t rows = go.numel() / cols;
    if (auto* gx = gr.grad_sink(x)) kernels::axpy(go.ptr(), T(1), gx->ptr(), go.numel());
    if (auto* gv = gr.grad_sink(v)) {
      for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < cols; ++c) gv->data[c] += go.data[r * cols + c];
      }
    }
  });
}

template <typename T>
Var mul_rowvec(Graph<T>& g, Var x, Var v) {
  int oid = static_cast<int>(g.size());
  return g.make("mul_rowvec", eager::mul_rowvec(g.val(x), g.val(v)), {x, v}, [x, v, oid](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    const auto& xval = gr.val(x);
    const auto& vval = gr.val(v);
    const std::int64_t cols = xval.cols();
    const std::int64_t rows = go.numel() / cols;
    if (auto* gx = gr.grad_sink(x)) {
      for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < cols; ++c) gx->data[r * cols + c] += go.data[r * cols + c] * vval.data[c];
      }
    }
    if (auto* gv = gr.grad_sink(v)) {
      for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < cols; ++c) gv->data[c] += go.data[r * cols + c] * xval.data[r * cols + c];
      }
    }
  });
}

// ---- matrix products ----

template <typename T>
Var matmul(Graph<T>& g, Var a, Var b) {
  const std::int64_t m = g.val(a).dim(0), k = g.val(a).dim(1);
  Tensor<T> out = eager::matmul(g.val(a), g.val(b));
  const std::int64_t n = out.dim(1);
  int oid = static_cast<int>(g.size());
  return g.make("matmul", std::move(out), {a, b}, [a, b, oid, m, k, n](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) {
      Tensor<T> tmp({m, k});
      kernels::matmul_nt(go.ptr(), gr.val(b).ptr(), tmp.ptr(), m, n, k);
      kernels::axpy(tmp.ptr(), T(1), ga->ptr(), tmp.numel());
    }
    if (auto* gb = gr.grad_sink(b)) {
      Tensor<T> tmp({k, n});
      kernels::matmul_tn(gr.val(a).ptr(), go.ptr(), tmp.ptr(), m, k, n);
      kernels::axpy(tmp.ptr(), T(1), gb->ptr(), tmp.numel());
    }
  });
}

template <typename T>
Var bmm(Graph<T>& g, Var a, Var b) {
  const std::int64_t gn = g.val(a).dim(0), m = g.val(a).dim(1), k = g.val(a).dim(2);
  Tensor<T> out = eager::bmm(g.val(a), g.val(b));
  const std::int64_t n = out.dim(2);
  int oid = static_cast<int>(g.size());
  return g.make("bmm", std::move(out), {a, b}, [a, b, oid, gn, m, k, n](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) {
      Tensor<T> tmp({gn, m, k});
      for (std::int64_t gi = 0; gi < gn; ++gi) {
        kernels::matmul_nt(go.ptr() + gi * m * n, gr.val(b).ptr() + gi * k * n, tmp.ptr() + gi * m * k, m, n, k);
      }
      kernels::axpy(tmp.ptr(), T(1), ga->ptr(), tmp.numel());
    }
    if (auto* gb = gr.grad_sink(b)) {
      Tensor<T> tmp({gn, k, n});
      for (std::int64_t gi = 0; gi < gn; ++gi) {
        kernels::matmul_tn(gr.val(a).ptr() + gi * m * k, go.ptr() + gi * m * n, tmp.ptr() + gi * k * n, m, k, n);
      }
      kernels::axpy(tmp.ptr(), T(1), gb->ptr(), tmp.numel());
    }
  });
}

// ---- data movement ----

template <typename T>
Var transpose2d(Graph<T>& g, Var a) {
  const std::int64_t m = g.val(a).dim(0), n = g.val(a).dim(1);
  int oid = static_cast<int>(g.size());
  return g.make("transpose2d", eager::transpose2d(g.val(a)), {a}, [a, oid, m, n](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) {
      for (std::int64_t i = 0; i < m; ++i) {
        for (std::int64_t j = 0; j < n; ++j) ga->data[i * n + j] += go.data[j * m + i];
      }
    }
  });
}

/// (a, b, c) -> (b, a, c), moving whole rows of length c.
template <typename T>
Var transpose01(Graph<T>& g, Var x) {
  const std::int64_t A = g.val(x).dim(0), B = g.val(x).dim(1), C = g.val(x).dim(2);
  int oid = static_cast<int>(g.size());
  return g.make("transpose01", eager::transpose01(g.val(x)), {x}, [x, oid, A, B, C](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* gx = gr.grad_sink(x)) {
      for (std::int64_t j = 0; j < B; ++j) {
        for (std::int64_t i = 0; i < A; ++i) {
          const T* src = go.ptr() + (j * A + i) * C;
          T* dst = gx->ptr() + (i * B + j) * C;
          for (std::int64_t c = 0; c < C; ++c) dst[c] += src[c];
        }
      }
    }
  });
}

/// (g, m, n) -> (g, n, m).
template <typename T>
Var transpose12(Graph<T>& g, Var x) {
  const std::int64_t G = g.val(x).dim(0), M = g.val(x).dim(1), N = g.val(x).dim(2);
  int oid = static_cast<int>(g.size());
  return g.make("transpose12", eager::transpose12(g.val(x)), {x}, [x, oid, G, M, N](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* gx = gr.grad_sink(x)) {
      for (std::int64_t gi = 0; gi < G; ++gi) {
        const T* src = go.ptr() + gi * M * N;
        T* dst = gx->ptr() + gi * M * N;
        for (std::int64_t i = 0; i < M; ++i) {
          for (std::int64_t j = 0; j < N; ++j) dst[i * N + j] += src[j * M + i];
        }
      }
    }
  });
}

template <typename T>
Var reshape(Graph<T>& g, Var a, Shape s) {
  int oid = static_cast<int>(g.size());
  return g.make("reshape", eager::reshape(g.val(a), std::move(s)), {a}, [a, oid](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) kernels::axpy(go.ptr(), T(1), ga->ptr(), go.numel());
  });
}

/// Contiguous slice [i0, i1) along the first axis.
template <typename T>
Var slice_first(Graph<T>& g, Var a, std::int64_t i0, std::int64_t i1) {
  const std::int64_t stride = g.val(a).numel() / g.val(a).dim(0);
  int oid = static_cast<int>(g.size());
  return g.make("slice_first", eager::slice_first(g.val(a), i0, i1), {a}, [a, oid, i0, stride](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) {
      for (std::int64_t i = 0; i < go.numel(); ++i) ga->data[i0 * stride + i] += go.data[i];
    }
  });
}

/// Slice [c0, c1) along the last axis.
template <typename T>
Var slice_last(Graph<T>& g, Var a, std::int64_t c0, std::int64_t c1) {
  const std::int64_t cols = g.val(a).cols();
  const std::int64_t rows = g.val(a).rows_flat();
  const std::int64_t w = c1 - c0;
  int oid = static_cast<int>(g.size());
  return g.make("slice_last", eager::slice_last(g.val(a), c0, c1), {a}, [a, oid, c0, w, cols, rows](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) {
      for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < w; ++c) ga->data[r * cols + c0 + c] += go.data[r * w + c];
      }
    }
  });
}

/// Concatenate along the last axis.
template <typename T>
Var concat_last(Graph<T>& g, const std::vector<Var>& parts) {
  std::vector<const Tensor<T>*> vals;
  vals.reserve(parts.size());
  for (Var p : parts) vals.push_back(&g.val(p));
  Tensor<T> out = eager::concat_last(vals);
  const std::int64_t rows = out.rows_flat();
  const std::int64_t total_cols = out.cols();
  int oid = static_cast<int>(g.size());
  std::vector<Var> ps(parts);
  return g.make_vec("concat_last", std::move(out), parts, [ps, oid, rows, total_cols](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    std::int64_t off = 0;
    for (Var p : ps) {
      const std::int64_t w = gr.val(p).cols();
      if (auto* gp = gr.grad_sink(p)) {
        for (std::int64_t r = 0; r < rows; ++r) {
          for (std::int64_t c = 0; c < w; ++c) gp->data[r * w + c] += go.data[r * total_cols + off + c];
        }
      }
      off += w;
    }
  });
}

// ---- normalization and reductions ----

template <typename T>
Var softmax_last(Graph<T>& g, Var a) {
  const std::int64_t rows = g.val(a).rows_flat(), cols = g.val(a).cols();
  int oid = static_cast<int>(g.size());
  return g.make("softmax", eager::softmax_last(g.val(a)), {a}, [a, oid, rows, cols](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    const auto& y = gr.val(Var{oid});
    if (auto* ga = gr.grad_sink(a)) {
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* yr = y.ptr() + r * cols;
        const T* gr_ = go.ptr() + r * cols;
        T dot = T(0);
        for (std::int64_t c = 0; c < cols; ++c) dot += yr[c] * gr_[c];
        T* out_g = ga->ptr() + r * cols;
        for (std::int64_t c = 0; c < cols; ++c) out_g[c] += yr[c] * (gr_[c] - dot);
      }
    }
  });
}

template <typename T>
Var layer_norm_last(Graph<T>& g, Var a, T eps) {
  const std::int64_t rows = g.val(a).rows_flat(), cols = g.val(a).cols();
  int oid = static_cast<int>(g.size());
  return g.make("layer_norm", eager::layer_norm_last(g.val(a), eps), {a}, [a, oid, rows, cols, eps](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    const auto& y = gr.val(Var{oid});
    const auto& x = gr.val(a);
    if (auto* ga = gr.grad_sink(a)) {
      for (std::int64_t r = 0; r < rows; ++r) {
        const T* xr = x.ptr() + r * cols;
        const T* yr = y.ptr() + r * cols;
        const T* gr_ = go.ptr() + r * cols;
        T mean = T(0);
        for (std::int64_t c = 0; c < cols; ++c) mean += xr[c];
        mean /= static_cast<T>(cols);
        T var = T(0);
        for (std::int64_t c = 0; c < cols; ++c) {
          const T d = xr[c] - mean;
          var += d * d;
        }
        var /= static_cast<T>(cols);
        const T inv_std = T(1) / std::sqrt(var + eps);
        T gmean = T(0), gymean = T(0);
        for (std::int64_t c = 0; c < cols; ++c) {
          gmean += gr_[c];
          gymean += gr_[c] * yr[c];
        }
        gmean /= static_cast<T>(cols);
        gymean /= static_cast<T>(cols);
        T* out_g = ga->ptr() + r * cols;
        for (std::int64_t c = 0; c < cols; ++c) {
          out_g[c] += inv_std * (gr_[c] - gmean - yr[c] * gymean);
        }
      }
    }
  });
}

template <typename T>
Var sum_all(Graph<T>& g, Var a) {
  int oid = static_cast<int>(g.size());
  return g.make("sum_all", eager::sum_all(g.val(a)), {a}, [a, oid](Graph<T>& gr) {
    const T go = gr.node(Var{oid}).grad.data[0];
    if (auto* ga = gr.grad_sink(a)) {
      for (auto& v : ga->data) v += go;
    }
  });
}

template <typename T>
Var mean_all(Graph<T>& g, Var a) {
  const T inv_n = T(1) / static_cast<T>(g.val(a).numel());
  int oid = static_cast<int>(g.size());
  return g.make("mean_all", eager::mean_all(g.val(a)), {a}, [a, oid, inv_n](Graph<T>& gr) {
    const T go = gr.node(Var{oid}).grad.data[0] * inv_n;
    if (auto* ga = gr.grad_sink(a)) {
      for (auto& v : ga->data) v += go;
    }
  });
}

/// Mean over all rows of a 2-D tensor -> shape (1, cols).
template <typename T>
Var mean_rows(Graph<T>& g, Var a) {
  const std::int64_t rows = g.val(a).dim(0), cols = g.val(a).dim(1);
  const T inv_r = T(1) / static_cast<T>(rows);
  int oid = static_cast<int>(g.size());
  return g.make("mean_rows", eager::mean_rows(g.val(a)), {a}, [a, oid, rows, cols, inv_r](Graph<T>& gr) {
    const auto& go = gr.node(Var{oid}).grad;
    if (auto* ga = gr.grad_sink(a)) {
      for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t c = 0; c < cols; ++c) ga->data[r * cols + c] += go.data[c] * inv_r;
      }
    }
  });
}

// ---- composites ----

/// x @ W + b applied to the last axis of x. W is (in, out), b is (out).
template <typename T>
Var linear(Graph<T>& g, Var x, Var w, Var b) {
  const auto& xv = g.val(x);
  const auto& wv = g.val(w);
  Shape out_shape = xv.shape;
  out_shape.back() = wv.dim(1);
  Var x2 = reshape(g, x, {xv.rows_flat(), xv.cols()});
  Var y2 = matmul(g, x2, w);
  Var yb = b.valid() ? add_rowvec(g, y2, b) : y2;
  return reshape(g, yb, out_shape);
}

/// softmax(q k^T / sqrt(d)) v. Accepts rank 2 (s, d) or rank 3 (g, s, d).
template <typename T>
Var attention(Graph<T>& g, Var q, Var k, Var v) {
  const auto& qv = g.val(q);
  const auto& kv = g.val(k);
  const auto& vv = g.val(v);
  eager::detail::require(qv.rank() == kv.rank() && kv.rank() == vv.rank(), "attention: rank mismatch");
  eager::detail::require(qv.cols() == kv.cols() && kv.shape == vv.shape,
                         "attention: q/k/v shapes incompatible: " + shape_str(qv.shape) + ", " + shape_str(kv.shape) + ", " + shape_str(vv.shape));
  const bool batched = qv.rank() == 3;
  eager::detail::require(batched || qv.rank() == 2, "attention: rank 2 or 3 required");
  const std::int64_t sq = batched ? qv.dim(1) : qv.dim(0);
  const std::int64_t dv = vv.cols();
  Var q3 = batched ? q : reshape(g, q, {1, qv.dim(0), qv.dim(1)});
  Var k3 = batched ? k : reshape(g, k, {1, kv.dim(0), kv.dim(1)});
  Var v3 = batched ? v : reshape(g, v, {1, vv.dim(0), vv.dim(1)});
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(qv.cols()));
  Var scores = scale(g, bmm(g, q3, transpose12(g, k3)), inv_sqrt_d);
  Var attn = softmax_last(g, scores);
  Var out = bmm(g, attn, v3);
  if (!batched) out = reshape(g, out, {sq, dv});
  return out;
}

}  // namespace voclip
