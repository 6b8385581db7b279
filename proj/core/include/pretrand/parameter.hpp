#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "pretrand/tensor.hpp"

namespace pretrand {

// A trainable tensor with its gradient and momentum buffers. Freezing a
// parameter makes sgd_step leave its value (and momentum) untouched while
// still clearing the gradient, so frozen blocks stay bit-identical across
// any number of steps.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> momentum;
  bool frozen = false;

  Parameter() = default;
  Parameter(std::string n, Tensor<T> v)
      : name(std::move(n)),
        value(std::move(v)),
        grad(Tensor<T>::zeros(value.shape)),
        momentum(Tensor<T>::zeros(value.shape)) {}

  std::size_t numel() const { return value.numel(); }

  void zero_grad() { grad.fill(T(0)); }

  // Grows a 2-D table by appending zero rows, keeping grad/momentum in sync.
  // Used when the vocabulary is extended at fine-tuning time.
  void append_rows(std::size_t extra) {
    PR_CHECK(value.ndim() == 2, "append_rows on non-matrix parameter " << name);
    std::size_t c = value.cols();
    value.shape[0] += extra;
    value.data.resize(value.data.size() + extra * c, T(0));
    grad = Tensor<T>::zeros(value.shape);
    momentum = Tensor<T>::zeros(value.shape);
  }
};

template <typename T>
using ParamRefs = std::vector<Parameter<T>*>;

// SGD with momentum: m <- mu*m + g; w <- w - lr*m; g <- 0.
// Frozen parameters only get their gradient cleared.
template <typename T>
void sgd_step(const ParamRefs<T>& params, T lr, T mu) {
  PR_CHECK(lr >= T(0), "negative learning rate");
  PR_CHECK(mu >= T(0) && mu < T(1), "momentum must be in [0,1)");
  for (Parameter<T>* p : params) {
    if (p->frozen) {
      p->zero_grad();
      continue;
    }
    T* m = p->momentum.data.data();
    T* g = p->grad.data.data();
    T* w = p->value.data.data();
    std::size_t n = p->value.numel();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = mu * m[i] + g[i];
      w[i] -= lr * m[i];
      g[i] = T(0);
    }
  }
}

// Rescales all gradients so their global L2 norm is at most max_norm.
// Returns the pre-clip norm. max_norm <= 0 disables clipping.
template <typename T>
double clip_global_norm(const ParamRefs<T>& params, double max_norm) {
  double sq = 0.0;
  for (Parameter<T>* p : params) {
    for (T g : p->grad.data) sq += static_cast<double>(g) * static_cast<double>(g);
  }
  double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    T s = static_cast<T>(max_norm / norm);
    for (Parameter<T>* p : params) {
      for (T& g : p->grad.data) g *= s;
    }
  }
  return norm;
}

template <typename T>
void scale_grads(const ParamRefs<T>& params, T s) {
  for (Parameter<T>* p : params) {
    for (T& g : p->grad.data) g *= s;
  }
}

template <typename T>
void zero_grads(const ParamRefs<T>& params) {
  for (Parameter<T>* p : params) p->zero_grad();
}

template <typename T>
std::size_t total_params(const ParamRefs<T>& params) {
  std::size_t n = 0;
  for (Parameter<T>* p : params) n += p->numel();
  return n;
}

}  // namespace pretrand
