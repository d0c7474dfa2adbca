#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>

#include "voclip/autodiff.hpp"
#include "voclip/tensor.hpp"

namespace voclip {

/// Builds a scalar loss from a single input leaf.
template <typename T>
using ScalarFn = std::function<Var(Graph<T>&, Var)>;

/// Compares the tape gradient of f at x against central finite differences
/// with per-coordinate step h = step * (1 + |x_i|). Returns the max over
/// coordinates of |analytic - numeric| / max(1, |analytic|, |numeric|).
template <typename T>
double grad_check(const ScalarFn<T>& f, const Tensor<T>& x, double step) {
  Graph<T> g;
  Var xv = g.leaf(x, true);
  Var loss = f(g, xv);
  if (g.val(loss).numel() != 1) throw std::invalid_argument("grad_check: f must return a scalar");
  g.backward(loss);
  Tensor<T> analytic = g.grad(xv);

  auto eval = [&](const Tensor<T>& at) {
    Graph<T> gg;
    Var v = gg.leaf(at, false);
    Var l = f(gg, v);
    const double out = static_cast<double>(gg.val(l).data[0]);
    if (!std::isfinite(out)) throw std::runtime_error("grad_check: non-finite function value");
    return out;
  };

  double max_err = 0.0;
  Tensor<T> probe = x;
  for (std::int64_t i = 0; i < x.numel(); ++i) {
    const double xi = static_cast<double>(x.data[i]);
    const double h = step * (1.0 + std::abs(xi));
    probe.data[i] = static_cast<T>(xi + h);
    const double fp = eval(probe);
    probe.data[i] = static_cast<T>(xi - h);
    const double fm = eval(probe);
    probe.data[i] = x.data[i];
    const double numeric = (fp - fm) / (2.0 * h);
    const double a = static_cast<double>(analytic.data[i]);
    const double err = std::abs(a - numeric) / std::max({1.0, std::abs(a), std::abs(numeric)});
    max_err = std::max(max_err, err);
  }
  return max_err;
}

}  // namespace voclip
