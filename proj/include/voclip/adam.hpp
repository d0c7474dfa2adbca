#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "voclip/autodiff.hpp"
#include "voclip/kernels.hpp"
#include "voclip/tensor.hpp"

namespace voclip {

struct AdamConfig {
  double lr = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

template <typename T>
struct AdamState {
  std::int64_t step = 0;
  std::vector<Tensor<T>> m;
  std::vector<Tensor<T>> v;
};

/// One Adam step over the given parameters, reading each Parameter's grad
/// slot. State is sized on first use; parameter order must stay fixed across
/// steps.
template <typename T>
void adam_step(const std::vector<Parameter<T>*>& params, AdamState<T>& state,
               const AdamConfig& cfg) {
  if (cfg.lr <= 0.0) throw std::invalid_argument("adam: learning rate must be positive");
  if (state.m.empty()) {
    for (auto* p : params) {
      state.m.push_back(Tensor<T>::zeros(p->value.shape));
      state.v.push_back(Tensor<T>::zeros(p->value.shape));
    }
  }
  if (state.m.size() != params.size()) {
    throw std::invalid_argument("adam: state does not match parameter list");
  }
  state.step += 1;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = *params[i];
    if (!p.value.same_shape(state.m[i])) {
      throw std::invalid_argument("adam: state shape mismatch for parameter '" + p.name + "'");
    }
    kernels::adam_update(p.value.ptr(), p.grad.ptr(), state.m[i].ptr(), state.v[i].ptr(),
                         p.value.numel(), static_cast<T>(cfg.lr), static_cast<T>(cfg.beta1),
                         static_cast<T>(cfg.beta2), static_cast<T>(cfg.eps), state.step);
  }
}

}  // namespace voclip
