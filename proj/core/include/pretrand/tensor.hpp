#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <numeric>
#include <vector>

#include "pretrand/errors.hpp"

namespace pretrand {

// Dense real array in row-major order. The only numeric carrier in the
// engine; instantiated with float (training/eval default) or double
// (gradient checking and most unit tests).
template <typename T>
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<T> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<T> d)
      : shape(std::move(s)), data(std::move(d)) {
    PR_CHECK(numel_of(shape) == data.size(),
             "tensor shape/data mismatch: shape wants " << numel_of(shape)
             << " values, got " << data.size());
  }

  static std::size_t numel_of(const std::vector<std::size_t>& s) {
    std::size_t n = 1;
    for (std::size_t d : s) n *= d;
    return n;
  }

  static Tensor zeros(std::vector<std::size_t> s) {
    std::size_t n = numel_of(s);
    return Tensor(std::move(s), std::vector<T>(n, T(0)));
  }

  static Tensor full(std::vector<std::size_t> s, T v) {
    std::size_t n = numel_of(s);
    return Tensor(std::move(s), std::vector<T>(n, v));
  }

  static Tensor vector(std::vector<T> d) {
    std::vector<std::size_t> s{d.size()};
    return Tensor(std::move(s), std::move(d));
  }

  static Tensor scalar(T v) { return Tensor({1}, {v}); }

  std::size_t numel() const { return data.size(); }
  std::size_t ndim() const { return shape.size(); }

  std::size_t rows() const {
    PR_CHECK(shape.size() == 2, "rows() on non-matrix tensor");
    return shape[0];
  }
  std::size_t cols() const {
    PR_CHECK(shape.size() == 2, "cols() on non-matrix tensor");
    return shape[1];
  }

  T& at(std::size_t i) { return data[i]; }
  T at(std::size_t i) const { return data[i]; }
  T& at(std::size_t i, std::size_t j) { return data[i * shape[1] + j]; }
  T at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  bool all_finite() const {
    for (T v : data) {
      if (!std::isfinite(static_cast<double>(v))) return false;
    }
    return true;
  }

  template <typename U>
  Tensor<U> cast() const {
    std::vector<U> d(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) d[i] = static_cast<U>(data[i]);
    return Tensor<U>(shape, std::move(d));
  }
};

template <typename T>
void ensure_finite(const Tensor<T>& t, const char* op_name) {
  PR_CHECK(t.all_finite(), "non-finite value produced by op '" << op_name << "'");
}

inline std::string shape_str(const std::vector<std::size_t>& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace pretrand
