#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "voclip/kernels.hpp"
#include "voclip/tensor.hpp"

// Forward-only tensor ops: shape validation plus a kernel call. The taped
// ops in autodiff.hpp call these for their forward pass, so the training
// and inference paths compute bit-identical values.

namespace voclip::eager {

namespace detail {

inline void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
}

}  // namespace detail

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.same_shape(b), "add: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor<T> out(a.shape);
  kernels::add(a.ptr(), b.ptr(), out.ptr(), out.numel());
  return out;
}

template <typename T>
Tensor<T> sub(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.same_shape(b), "sub: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor<T> out(a.shape);
  kernels::sub(a.ptr(), b.ptr(), out.ptr(), out.numel());
  return out;
}

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.same_shape(b), "mul: shape mismatch " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor<T> out(a.shape);
  kernels::mul(a.ptr(), b.ptr(), out.ptr(), out.numel());
  return out;
}

template <typename T>
Tensor<T> scale(const Tensor<T>& a, T s) {
  Tensor<T> out(a.shape);
  kernels::scale(a.ptr(), s, out.ptr(), out.numel());
  return out;
}

template <typename T>
Tensor<T> gelu(const Tensor<T>& a) {
  Tensor<T> out(a.shape);
  kernels::gelu(a.ptr(), out.ptr(), out.numel());
  return out;
}

template <typename T>
Tensor<T> add_rowvec(const Tensor<T>& x, const Tensor<T>& v) {
  detail::require(v.numel() == x.cols(), "add_rowvec: vector " + shape_str(v.shape) + " does not match columns of " + shape_str(x.shape));
  Tensor<T> out(x.shape);
  const std::int64_t rows = x.rows_flat(), cols = x.cols();
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) out.data[r * cols + c] = x.data[r * cols + c] + v.data[c];
  }
  return out;
}

template <typename T>
Tensor<T> mul_rowvec(const Tensor<T>& x, const Tensor<T>& v) {
  detail::require(v.numel() == x.cols(), "mul_rowvec: vector " + shape_str(v.shape) + " does not match columns of " + shape_str(x.shape));
  Tensor<T> out(x.shape);
  const std::int64_t rows = x.rows_flat(), cols = x.cols();
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) out.data[r * cols + c] = x.data[r * cols + c] * v.data[c];
  }
  return out;
}

template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.rank() == 2 && b.rank() == 2, "matmul: operands must be rank 2, got " + shape_str(a.shape) + " and " + shape_str(b.shape));
  detail::require(a.dim(1) == b.dim(0), "matmul: inner dims differ, " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor<T> out({a.dim(0), b.dim(1)});
  kernels::matmul(a.ptr(), b.ptr(), out.ptr(), a.dim(0), a.dim(1), b.dim(1));
  return out;
}

template <typename T>
Tensor<T> bmm(const Tensor<T>& a, const Tensor<T>& b) {
  detail::require(a.rank() == 3 && b.rank() == 3, "bmm: operands must be rank 3, got " + shape_str(a.shape) + " and " + shape_str(b.shape));
  detail::require(a.dim(0) == b.dim(0) && a.dim(2) == b.dim(1), "bmm: incompatible shapes " + shape_str(a.shape) + " vs " + shape_str(b.shape));
  Tensor<T> out({a.dim(0), a.dim(1), b.dim(2)});
  kernels::bmm(a.ptr(), b.ptr(), out.ptr(), a.dim(0), a.dim(1), a.dim(2), b.dim(2));
  return out;
}

template <typename T>
void transpose2d_raw(const T* x, T* y, std::int64_t m, std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) y[j * m + i] = x[i * n + j];
  }
}

template <typename T>
Tensor<T> transpose2d(const Tensor<T>& a) {
  detail::require(a.rank() == 2, "transpose2d: rank 2 required, got " + shape_str(a.shape));
  Tensor<T> out({a.dim(1), a.dim(0)});
  transpose2d_raw(a.ptr(), out.ptr(), a.dim(0), a.dim(1));
  return out;
}

/// (a, b, c) -> (b, a, c).
template <typename T>
Tensor<T> transpose01(const Tensor<T>& x) {
  detail::require(x.rank() == 3, "transpose01: rank 3 required, got " + shape_str(x.shape));
  const std::int64_t A = x.dim(0), B = x.dim(1), C = x.dim(2);
  Tensor<T> out({B, A, C});
  for (std::int64_t i = 0; i < A; ++i) {
    for (std::int64_t j = 0; j < B; ++j) {
      const T* src = x.ptr() + (i * B + j) * C;
      T* dst = out.ptr() + (j * A + i) * C;
      for (std::int64_t c = 0; c < C; ++c) dst[c] = src[c];
    }
  }
  return out;
}

/// (g, m, n) -> (g, n, m).
template <typename T>
Tensor<T> transpose12(const Tensor<T>& x) {
  detail::require(x.rank() == 3, "transpose12: rank 3 required, got " + shape_str(x.shape));
  const std::int64_t G = x.dim(0), M = x.dim(1), N = x.dim(2);
  Tensor<T> out({G, N, M});
  for (std::int64_t gi = 0; gi < G; ++gi) {
    transpose2d_raw(x.ptr() + gi * M * N, out.ptr() + gi * M * N, M, N);
  }
  return out;
}

template <typename T>
Tensor<T> reshape(const Tensor<T>& a, Shape s) {
  detail::require(shape_numel(s) == a.numel(), "reshape: element count mismatch, " + shape_str(a.shape) + " -> " + shape_str(s));
  return Tensor<T>(std::move(s), a.data);
}

template <typename T>
Tensor<T> slice_first(const Tensor<T>& a, std::int64_t i0, std::int64_t i1) {
  detail::require(a.rank() >= 1 && 0 <= i0 && i0 < i1 && i1 <= a.dim(0), "slice_first: bad range [" + std::to_string(i0) + ", " + std::to_string(i1) + ") for " + shape_str(a.shape));
  Shape s = a.shape;
  s[0] = i1 - i0;
  const std::int64_t stride = a.numel() / a.dim(0);
  Tensor<T> out(s);
  for (std::int64_t i = 0; i < out.numel(); ++i) out.data[i] = a.data[i0 * stride + i];
  return out;
}

template <typename T>
Tensor<T> slice_last(const Tensor<T>& a, std::int64_t c0, std::int64_t c1) {
  const std::int64_t cols = a.cols();
  detail::require(0 <= c0 && c0 < c1 && c1 <= cols, "slice_last: bad range [" + std::to_string(c0) + ", " + std::to_string(c1) + ") for " + shape_str(a.shape));
  Shape s = a.shape;
  s.back() = c1 - c0;
  const std::int64_t rows = a.rows_flat(), w = c1 - c0;
  Tensor<T> out(s);
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < w; ++c) out.data[r * w + c] = a.data[r * cols + c0 + c];
  }
  return out;
}

template <typename T>
Tensor<T> concat_last(const std::vector<const Tensor<T>*>& parts) {
  detail::require(!parts.empty(), "concat_last: no inputs");
  Shape s = parts[0]->shape;
  std::int64_t total_cols = 0;
  for (const auto* p : parts) {
    Shape ps = p->shape;
    ps.back() = 0;
    Shape fs = s;
    fs.back() = 0;
    detail::require(ps == fs, "concat_last: leading dims differ, " + shape_str(p->shape) + " vs " + shape_str(parts[0]->shape));
    total_cols += p->cols();
  }
  s.back() = total_cols;
  Tensor<T> out(s);
  const std::int64_t rows = out.rows_flat();
  std::int64_t off = 0;
  for (const auto* p : parts) {
    const std::int64_t w = p->cols();
    for (std::int64_t r = 0; r < rows; ++r) {
      for (std::int64_t c = 0; c < w; ++c) out.data[r * total_cols + off + c] = p->data[r * w + c];
    }
    off += w;
  }
  return out;
}

template <typename T>
Tensor<T> softmax_last(const Tensor<T>& a) {
  Tensor<T> out(a.shape);
  kernels::softmax_rows(a.ptr(), out.ptr(), a.rows_flat(), a.cols());
  return out;
}

template <typename T>
Tensor<T> layer_norm_last(const Tensor<T>& a, T eps) {
  Tensor<T> out(a.shape);
  kernels::layer_norm_rows(a.ptr(), out.ptr(), a.rows_flat(), a.cols(), eps);
  return out;
}

template <typename T>
Tensor<T> sum_all(const Tensor<T>& a) {
  T acc = T(0);
  for (auto v : a.data) acc += v;
  return Tensor<T>::scalar(acc);
}

template <typename T>
Tensor<T> mean_all(const Tensor<T>& a) {
  T acc = T(0);
  for (auto v : a.data) acc += v;
  return Tensor<T>::scalar(acc / static_cast<T>(a.numel()));
}

template <typename T>
Tensor<T> mean_rows(const Tensor<T>& a) {
  detail::require(a.rank() == 2, "mean_rows: rank 2 required, got " + shape_str(a.shape));
  const std::int64_t rows = a.dim(0), cols = a.dim(1);
  Tensor<T> out({1, cols});
  for (std::int64_t r = 0; r < rows; ++r) {
    for (std::int64_t c = 0; c < cols; ++c) out.data[c] += a.data[r * cols + c];
  }
  const T inv_r = T(1) / static_cast<T>(rows);
  for (std::int64_t c = 0; c < cols; ++c) out.data[c] *= inv_r;
  return out;
}

}  // namespace voclip::eager
