#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

// Serial reference implementations of the kernels in kernels.hpp. Plain
// naive loops, no OpenMP. Tests compare the production kernels against
// these, and tools/bench.cpp reports the speedup.

namespace voclip::ref {

template <typename T>
void matmul(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k,
            std::int64_t n) {
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < n; ++j) {
      T acc = T(0);
      for (std::int64_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * n + j];
      c[i * n + j] = acc;
    }
  }
}

template <typename T>
void bmm(const T* a, const T* b, T* c, std::int64_t g, std::int64_t m,
         std::int64_t k, std::int64_t n) {
  for (std::int64_t gi = 0; gi < g; ++gi) {
    matmul(a + gi * m * k, b + gi * k * n, c + gi * m * n, m, k, n);
  }
}

template <typename T>
void softmax_rows(const T* x, T* y, std::int64_t rows, std::int64_t cols) {
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = x + r * cols;
    T* yr = y + r * cols;
    T mx = xr[0];
    for (std::int64_t j = 1; j < cols; ++j) mx = std::max(mx, xr[j]);
    T sum = T(0);
    for (std::int64_t j = 0; j < cols; ++j) {
      yr[j] = std::exp(xr[j] - mx);
      sum += yr[j];
    }
    const T inv = T(1) / sum;
    for (std::int64_t j = 0; j < cols; ++j) yr[j] *= inv;
  }
}

template <typename T>
void layer_norm_rows(const T* x, T* y, std::int64_t rows, std::int64_t cols,
                     T eps) {
  for (std::int64_t r = 0; r < rows; ++r) {
    const T* xr = x + r * cols;
    T* yr = y + r * cols;
    T mean = T(0);
    for (std::int64_t j = 0; j < cols; ++j) mean += xr[j];
    mean /= static_cast<T>(cols);
    T var = T(0);
    for (std::int64_t j = 0; j < cols; ++j) {
      const T d = xr[j] - mean;
      var += d * d;
    }
    var /= static_cast<T>(cols);
    const T inv_std = T(1) / std::sqrt(var + eps);
    for (std::int64_t j = 0; j < cols; ++j) yr[j] = (xr[j] - mean) * inv_std;
  }
}

template <typename T>
void gelu(const T* x, T* y, std::int64_t n) {
  for (std::int64_t i = 0; i < n; ++i) {
    y[i] = T(0.5) * x[i] * (T(1) + std::erf(x[i] * T(M_SQRT1_2)));
  }
}

/// softmax(q k^T / sqrt(d)) v for a single group, explicit loops.
template <typename T>
void attention(const T* q, const T* k, const T* v, T* out, std::int64_t s_q,
               std::int64_t s_k, std::int64_t d) {
  const T inv_sqrt_d = T(1) / std::sqrt(static_cast<T>(d));
  std::vector<T> row(static_cast<std::size_t>(s_k));
  for (std::int64_t i = 0; i < s_q; ++i) {
    for (std::int64_t j = 0; j < s_k; ++j) {
      T acc = T(0);
      for (std::int64_t p = 0; p < d; ++p) acc += q[i * d + p] * k[j * d + p];
      row[static_cast<std::size_t>(j)] = acc * inv_sqrt_d;
    }
    T mx = row[0];
    for (std::int64_t j = 1; j < s_k; ++j)
      mx = std::max(mx, row[static_cast<std::size_t>(j)]);
    T sum = T(0);
    for (std::int64_t j = 0; j < s_k; ++j) {
      row[static_cast<std::size_t>(j)] =
          std::exp(row[static_cast<std::size_t>(j)] - mx);
      sum += row[static_cast<std::size_t>(j)];
    }
    for (std::int64_t p = 0; p < d; ++p) {
      T acc = T(0);
      for (std::int64_t j = 0; j < s_k; ++j)
        acc += row[static_cast<std::size_t>(j)] * v[j * d + p];
      out[i * d + p] = acc / sum;
    }
  }
}

}  // namespace voclip::ref
