#pragma once

#include <cmath>
#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

// OpenMP kernels used by the tensor/autodiff layer. Every kernel assigns each
// output element to exactly one thread and reduces over a fixed index order,
// so results are bitwise identical for any thread count. Serial counterparts
// live in ref_kernels.hpp and are used by tests and the benchmark tool.

namespace voclip::kernels {

inline constexpr std::int64_t kParGrain = 4096;  // skip omp below this many ops

/// c[m x n] = a[m x k] * b[k x n], row-major. Accumulation order over k is
/// ascending for every output element.
template <typename T>
void matmul(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k,
            std::int64_t n) {
#pragma omp parallel for schedule(static) if (m * k * n >= kParGrain)
  for (std::int64_t i = 0; i < m; ++i) {
    T* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) ci[j] = T(0);
    const T* ai = a + i * k;
    for (std::int64_t p = 0; p < k; ++p) {
      const T av = ai[p];
      const T* bp = b + p * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
    }
  }
}

/// c[m x n] = a[m x k] * b[n x k]^T.
template <typename T>
void matmul_nt(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k,
               std::int64_t n) {
#pragma omp parallel for schedule(static) if (m * k * n >= kParGrain)
  for (std::int64_t i = 0; i < m; ++i) {
    const T* ai = a + i * k;
    T* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) {
      const T* bj = b + j * k;
      T acc = T(0);
      for (std::int64_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
      ci[j] = acc;
    }
  }
}

/// c[k x n] = a[m x k]^T * b[m x n]. Reduction over m is ascending.
template <typename T>
void matmul_tn(const T* a, const T* b, T* c, std::int64_t m, std::int64_t k,
               std::int64_t n) {
#pragma omp parallel for schedule(static) if (m * k * n >= kParGrain)
  for (std::int64_t i = 0; i < k; ++i) {
    T* ci = c + i * n;
    for (std::int64_t j = 0; j < n; ++j) ci[j] = T(0);
    for (std::int64_t r = 0; r < m; ++r) {
      const T av = a[r * k + i];
      const T* br = b + r * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] += av * br[j];
    }
  }
}

/// Batched matmul over g independent [m x k] * [k x n] products.
template <typename T>
void bmm(const T* a, const T* b, T* c, std::int64_t g, std::int64_t m,
         std::int64_t k, std::int64_t n) {
#pragma omp parallel for schedule(static) collapse(2) \
    if (g * m * k * n >= kParGrain)
  for (std::int64_t gi = 0; gi < g; ++gi) {
    for (std::int64_t i = 0; i < m; ++i) {
      const T* ag = a + gi * m * k;
      const T* bg = b + gi * k * n;
      T* ci = c + gi * m * n + i * n;
      for (std::int64_t j = 0; j < n; ++j) ci[j] = T(0);
      const T* ai = ag + i * k;
      for (std::int64_t p = 0; p < k; ++p) {
        const T av = ai[p];
        const T* bp = bg + p * n;
        for (std::int64_t j = 0; j < n; ++j) ci[j] += av * bp[j];
      }
    }
  }
}

/// Row-wise softmax with max subtraction.
template <typename T>
void softmax_rows(const T* x, T* y, std::int64_t rows, std::int64_t cols) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParGrain)
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

/// Row-wise layer normalization (no affine). Variance is the biased estimate;
/// eps sits inside the square root.
template <typename T>
void layer_norm_rows(const T* x, T* y, std::int64_t rows, std::int64_t cols,
                     T eps) {
#pragma omp parallel for schedule(static) if (rows * cols >= kParGrain)
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

/// Exact GELU: 0.5 * x * (1 + erf(x / sqrt(2))).
template <typename T>
void gelu(const T* x, T* y, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n >= kParGrain)
  for (std::int64_t i = 0; i < n; ++i) {
    y[i] = T(0.5) * x[i] * (T(1) + std::erf(x[i] * T(M_SQRT1_2)));
  }
}

/// d/dx of exact GELU.
template <typename T>
void gelu_grad(const T* x, const T* gout, T* gin, std::int64_t n) {
  const T inv_sqrt_2pi = T(0.3989422804014326779);
#pragma omp parallel for schedule(static) if (n >= kParGrain)
  for (std::int64_t i = 0; i < n; ++i) {
    const T cdf = T(0.5) * (T(1) + std::erf(x[i] * T(M_SQRT1_2)));
    const T pdf = inv_sqrt_2pi * std::exp(T(-0.5) * x[i] * x[i]);
    gin[i] += gout[i] * (cdf + x[i] * pdf);
  }
}

template <typename T>
void add(const T* a, const T* b, T* c, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n >= kParGrain)
  for (std::int64_t i = 0; i < n; ++i) c[i] = a[i] + b[i];
}

template <typename T>
void sub(const T* a, const T* b, T* c, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n >= kParGrain)
  for (std::int64_t i = 0; i < n; ++i) c[i] = a[i] - b[i];
}

template <typename T>
void mul(const T* a, const T* b, T* c, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n >= kParGrain)
  for (std::int64_t i = 0; i < n; ++i) c[i] = a[i] * b[i];
}

template <typename T>
void scale(const T* a, T s, T* c, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n >= kParGrain)
  for (std::int64_t i = 0; i < n; ++i) c[i] = a[i] * s;
}

template <typename T>
void axpy(const T* a, T s, T* c, std::int64_t n) {
#pragma omp parallel for schedule(static) if (n >= kParGrain)
  for (std::int64_t i = 0; i < n; ++i) c[i] += a[i] * s;
}

/// One Adam step with bias correction over a flat parameter buffer.
template <typename T>
void adam_update(T* w, const T* g, T* m, T* v, std::int64_t n, T lr, T beta1,
                 T beta2, T eps, std::int64_t step) {
  const T bc1 = T(1) - std::pow(beta1, static_cast<T>(step));
  const T bc2 = T(1) - std::pow(beta2, static_cast<T>(step));
#pragma omp parallel for schedule(static) if (n >= kParGrain)
  for (std::int64_t i = 0; i < n; ++i) {
    m[i] = beta1 * m[i] + (T(1) - beta1) * g[i];
    v[i] = beta2 * v[i] + (T(1) - beta2) * g[i] * g[i];
    const T mhat = m[i] / bc1;
    const T vhat = v[i] / bc2;
    w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

inline int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

inline void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

}  // namespace voclip::kernels
