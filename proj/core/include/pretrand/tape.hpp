#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "pretrand/parameter.hpp"
#include "pretrand/tensor.hpp"

namespace pretrand {

// Handle to a node on a Tape. Only meaningful for the tape that created it.
struct Var {
  std::size_t idx = static_cast<std::size_t>(-1);
};

// Reverse-mode differentiation over an op-by-op execution record. Each op
// appends one node holding the output value plus a closure that routes the
// node's gradient to its inputs; backward() replays the closures in exact
// reverse execution order, so gradients accumulate additively at fan-out.
//
// Parameters enter the tape by reference (leaf/lookup): their values are
// never copied and their gradients accumulate directly into Parameter::grad.
// A Tape is single-threaded and lives for one forward/backward pass.
//
// Every op output is checked for NaN/Inf and a violation throws, never
// propagates silently. With gradients disabled (set_grad_enabled(false))
// no closures or grad buffers are recorded, which makes pure inference
// passes cheap.
template <typename T>
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool grad_enabled() const { return grad_enabled_; }
  void set_grad_enabled(bool on) { grad_enabled_ = on; }
  std::size_t size() const { return nodes_.size(); }

  // References returned by val()/grad() stay valid while the tape lives:
  // nodes are stored in a deque, which never relocates elements on growth.
  const Tensor<T>& val(Var v) const {
    const Node& n = nodes_[v.idx];
    return n.param ? n.param->value : n.value;
  }

  Tensor<T>& grad(Var v) {
    Node& n = nodes_[v.idx];
    return n.param ? n.param->grad : n.grad;
  }

  // --- graph inputs ---------------------------------------------------

  Var leaf(Parameter<T>& p) {
    Node n;
    n.param = &p;
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  Var constant(Tensor<T> v) {
    return push(std::move(v), "constant", nullptr);
  }

  Var zeros(std::vector<std::size_t> shape) {
    return constant(Tensor<T>::zeros(std::move(shape)));
  }

  // --- differentiable ops ----------------------------------------------

  // C[m,n] = A[m,k] * B[k,n]; dA = dC*B^T, dB = A^T*dC.
  Var matmul(Var a, Var b) {
    const Tensor<T>& A = val(a);
    const Tensor<T>& B = val(b);
    PR_CHECK(A.ndim() == 2 && B.ndim() == 2,
             "matmul wants matrices, got " << shape_str(A.shape) << " and "
                                           << shape_str(B.shape));
    PR_CHECK(A.cols() == B.rows(),
             "matmul inner dims disagree: " << shape_str(A.shape) << " * "
                                            << shape_str(B.shape));
    std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    Tensor<T> C = Tensor<T>::zeros({m, n});
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t p = 0; p < k; ++p) {
        T aip = A.at(i, p);
        for (std::size_t j = 0; j < n; ++j) C.at(i, j) += aip * B.at(p, j);
      }
    }
    return push(std::move(C), "matmul", [a, b, m, k, n](Tape& t, Var out) {
      const Tensor<T>& G = t.grad_of(out);
      const Tensor<T>& A2 = t.val(a);
      const Tensor<T>& B2 = t.val(b);
      Tensor<T>& dA = t.grad(a);
      Tensor<T>& dB = t.grad(b);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          T g = G.at(i, j);
          for (std::size_t p = 0; p < k; ++p) {
            dA.at(i, p) += g * B2.at(p, j);
            dB.at(p, j) += A2.at(i, p) * g;
          }
        }
    });
  }

  // y[m] = A[m,k] * x[k]; dA = g x^T, dx = A^T g.
  Var matvec(Var a, Var x) {
    const Tensor<T>& A = val(a);
    const Tensor<T>& X = val(x);
    PR_CHECK(A.ndim() == 2 && X.ndim() == 1,
             "matvec wants matrix and vector, got " << shape_str(A.shape)
                                                    << " and " << shape_str(X.shape));
    PR_CHECK(A.cols() == X.numel(),
             "matvec dims disagree: " << shape_str(A.shape) << " * "
                                      << shape_str(X.shape));
    std::size_t m = A.rows(), k = A.cols();
    Tensor<T> y = Tensor<T>::zeros({m});
    const T* ad = A.data.data();
    const T* xd = X.data.data();
    for (std::size_t i = 0; i < m; ++i) {
      T acc = T(0);
      const T* row = ad + i * k;
      for (std::size_t p = 0; p < k; ++p) acc += row[p] * xd[p];
      y.at(i) = acc;
    }
    return push(std::move(y), "matvec", [a, x, m, k](Tape& t, Var out) {
      const Tensor<T>& G = t.grad_of(out);
      const Tensor<T>& A2 = t.val(a);
      const Tensor<T>& X2 = t.val(x);
      Tensor<T>& dA = t.grad(a);
      Tensor<T>& dX = t.grad(x);
      for (std::size_t i = 0; i < m; ++i) {
        T g = G.at(i);
        if (g == T(0)) continue;
        const T* row = A2.data.data() + i * k;
        T* drow = dA.data.data() + i * k;
        for (std::size_t p = 0; p < k; ++p) {
          drow[p] += g * X2.at(p);
          dX.at(p) += row[p] * g;
        }
      }
    });
  }

  Var add(Var a, Var b) {
    const Tensor<T>& A = val(a);
    const Tensor<T>& B = val(b);
    PR_CHECK(A.same_shape(B), "add shape mismatch: " << shape_str(A.shape)
                                                     << " vs " << shape_str(B.shape));
    Tensor<T> y = A;
    for (std::size_t i = 0; i < y.numel(); ++i) y.at(i) += B.at(i);
    return push(std::move(y), "add", [a, b](Tape& t, Var out) {
      const Tensor<T>& G = t.grad_of(out);
      Tensor<T>& dA = t.grad(a);
      Tensor<T>& dB = t.grad(b);
      for (std::size_t i = 0; i < G.numel(); ++i) {
        dA.at(i) += G.at(i);
        dB.at(i) += G.at(i);
      }
    });
  }

  // Hadamard product.
  Var mul(Var a, Var b) {
    const Tensor<T>& A = val(a);
    const Tensor<T>& B = val(b);
    PR_CHECK(A.same_shape(B), "mul shape mismatch: " << shape_str(A.shape)
                                                     << " vs " << shape_str(B.shape));
    Tensor<T> y = A;
    for (std::size_t i = 0; i < y.numel(); ++i) y.at(i) *= B.at(i);
    return push(std::move(y), "mul", [a, b](Tape& t, Var out) {
      const Tensor<T>& G = t.grad_of(out);
      const Tensor<T>& A2 = t.val(a);
      const Tensor<T>& B2 = t.val(b);
      Tensor<T>& dA = t.grad(a);
      Tensor<T>& dB = t.grad(b);
      for (std::size_t i = 0; i < G.numel(); ++i) {
        dA.at(i) += G.at(i) * B2.at(i);
        dB.at(i) += G.at(i) * A2.at(i);
      }
    });
  }

  Var scale(Var a, T c) {
    Tensor<T> y = val(a);
    for (T& v : y.data) v *= c;
    return push(std::move(y), "scale", [a, c](Tape& t, Var out) {
      const Tensor<T>& G = t.grad_of(out);
      Tensor<T>& dA = t.grad(a);
      for (std::size_t i = 0; i < G.numel(); ++i) dA.at(i) += c * G.at(i);
    });
  }

  Var sigmoid(Var a) {
    Tensor<T> y = val(a);
    for (T& v : y.data) {
      double x = static_cast<double>(v);
      v = static_cast<T>(x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                                  : std::exp(x) / (1.0 + std::exp(x)));
    }
    return push(std::move(y), "sigmoid", [a](Tape& t, Var out) {
      const Tensor<T>& G = t.grad_of(out);
      const Tensor<T>& Y = t.val(out);
      Tensor<T>& dA = t.grad(a);
      for (std::size_t i = 0; i < G.numel(); ++i) {
        T s = Y.at(i);
        dA.at(i) += G.at(i) * s * (T(1) - s);
      }
    });
  }

  Var tanh_op(Var a) {
    Tensor<T> y = val(a);
    for (T& v : y.data) v = static_cast<T>(std::tanh(static_cast<double>(v)));
    return push(std::move(y), "tanh", [a](Tape& t, Var out) {
      const Tensor<T>& G = t.grad_of(out);
      const Tensor<T>& Y = t.val(out);
      Tensor<T>& dA = t.grad(a);
      for (std::size_t i = 0; i < G.numel(); ++i) {
        T v = Y.at(i);
        dA.at(i) += G.at(i) * (T(1) - v * v);
      }
    });
  }

  // Concatenation of 1-D vectors.
  Var concat(std::span<const Var> parts) {
    PR_CHECK(!parts.empty(), "concat of nothing");
    std::size_t n = 0;
    for (Var p : parts) {
      PR_CHECK(val(p).ndim() == 1, "concat wants vectors");
      n += val(p).numel();
    }
    Tensor<T> y = Tensor<T>::zeros({n});
    std::size_t off = 0;
    for (Var p : parts) {
      const Tensor<T>& v = val(p);
      std::copy(v.data.begin(), v.data.end(), y.data.begin() + off);
      off += v.numel();
    }
    std::vector<Var> ps(parts.begin(), parts.end());
    return push(std::move(y), "concat", [ps](Tape& t, Var out) {
      const Tensor<T>& G = t.grad_of(out);
      std::size_t off = 0;
      for (Var p : ps) {
        Tensor<T>& dP = t.grad(p);
        for (std::size_t i = 0; i < dP.numel(); ++i) dP.at(i) += G.at(off + i);
        off += dP.numel();
      }
    });
  }

  Var concat(std::initializer_list<Var> parts) {
    std::vector<Var> v(parts);
    return concat(std::span<const Var>(v));
  }

  // [lo, hi) of a 1-D vector.
  Var slice(Var a, std::size_t lo, std::size_t hi) {
    const Tensor<T>& A = val(a);
    PR_CHECK(A.ndim() == 1, "slice wants a vector");
    PR_CHECK(lo < hi && hi <= A.numel(),
             "slice bounds [" << lo << "," << hi << ") out of range for "
                              << shape_str(A.shape));
    Tensor<T> y = Tensor<T>::zeros({hi - lo});
    std::copy(A.data.begin() + lo, A.data.begin() + hi, y.data.begin());
    return push(std::move(y), "slice", [a, lo, hi](Tape& t, Var out) {
      const Tensor<T>& G = t.grad_of(out);
      Tensor<T>& dA = t.grad(a);
      for (std::size_t i = 0; i < hi - lo; ++i) dA.at(lo + i) += G.at(i);
    });
  }

  // Embedding lookup: one row of a table parameter. The gradient is sparse,
  // accumulating only into the touched row.
  Var lookup(Parameter<T>& table, std::size_t row) {
    PR_CHECK(table.value.ndim() == 2, "lookup wants a 2-D table");
    PR_CHECK(row < table.value.rows(),
             "lookup row " << row << " out of range for " << table.name);
    std::size_t d = table.value.cols();
    Tensor<T> y = Tensor<T>::zeros({d});
    const T* src = table.value.data.data() + row * d;
    std::copy(src, src + d, y.data.begin());
    Parameter<T>* tp = &table;
    return push(std::move(y), "lookup", [tp, row, d](Tape& t, Var out) {
      const Tensor<T>& G = t.grad_of(out);
      T* dst = tp->grad.data.data() + row * d;
      for (std::size_t i = 0; i < d; ++i) dst[i] += G.at(i);
    });
  }

  // x / max(||x||_p, eps). For inputs with norm >= eps the output has unit
  // p-norm; eps only guards the zero vector.
  Var lp_normalize(Var x, T p, T eps) {
    const Tensor<T>& X = val(x);
    PR_CHECK(X.ndim() == 1, "lp_normalize wants a vector");
    PR_CHECK(p >= T(1), "lp_normalize wants p >= 1, got " << p);
    PR_CHECK(eps > T(0), "lp_normalize wants eps > 0");
    double norm = 0.0;
    for (T v : X.data) norm += std::pow(std::abs(static_cast<double>(v)),
                                        static_cast<double>(p));
    norm = std::pow(norm, 1.0 / static_cast<double>(p));
    bool clamped = norm < static_cast<double>(eps);
    T m = clamped ? eps : static_cast<T>(norm);
    Tensor<T> y = X;
    for (T& v : y.data) v /= m;
    return push(std::move(y), "lp_normalize", [x, p, m, clamped](Tape& t, Var out) {
      const Tensor<T>& G = t.grad_of(out);
      const Tensor<T>& X2 = t.val(x);
      Tensor<T>& dX = t.grad(x);
      if (clamped) {
        for (std::size_t i = 0; i < G.numel(); ++i) dX.at(i) += G.at(i) / m;
        return;
      }
      // d/dx_j (x/||x||_p): g_j/m - (g.x) sign(x_j)|x_j|^(p-1) / m^(p+1)
      double gx = 0.0;
      for (std::size_t i = 0; i < G.numel(); ++i)
        gx += static_cast<double>(G.at(i)) * static_cast<double>(X2.at(i));
      double md = static_cast<double>(m);
      double denom = std::pow(md, static_cast<double>(p) + 1.0);
      for (std::size_t j = 0; j < G.numel(); ++j) {
        double xj = static_cast<double>(X2.at(j));
        double dnorm = (xj == 0.0) ? 0.0
                                   : (xj > 0.0 ? 1.0 : -1.0) *
                                         std::pow(std::abs(xj),
                                                  static_cast<double>(p) - 1.0);
        dX.at(j) += static_cast<T>(static_cast<double>(G.at(j)) / md -
                                   gx * dnorm / denom);
      }
    });
  }

  // -log softmax(logits)[target], with max-subtraction for stability.
  // Backward: softmax(logits) - onehot(target).
  Var softmax_cross_entropy(Var logits, std::size_t target) {
    const Tensor<T>& L = val(logits);
    PR_CHECK(L.ndim() == 1, "softmax_cross_entropy wants a logit vector");
    PR_CHECK(target < L.numel(),
             "target class " << target << " out of range for C=" << L.numel());
    double mx = -HUGE_VAL;
    for (T v : L.data) mx = std::max(mx, static_cast<double>(v));
    double sum = 0.0;
    std::vector<T> probs(L.numel());
    for (std::size_t i = 0; i < L.numel(); ++i)
      sum += std::exp(static_cast<double>(L.at(i)) - mx);
    for (std::size_t i = 0; i < L.numel(); ++i)
      probs[i] = static_cast<T>(std::exp(static_cast<double>(L.at(i)) - mx) / sum);
    double loss = -(static_cast<double>(L.at(target)) - mx - std::log(sum));
    Tensor<T> y = Tensor<T>::scalar(static_cast<T>(loss));
    return push(std::move(y), "softmax_cross_entropy",
                [logits, target, probs](Tape& t, Var out) {
                  T g = t.grad_of(out).at(0);
                  Tensor<T>& dL = t.grad(logits);
                  for (std::size_t i = 0; i < probs.size(); ++i) {
                    T delta = probs[i] - (i == target ? T(1) : T(0));
                    dL.at(i) += g * delta;
                  }
                });
  }

  // Scalar <w, x> over the flattened data; the workhorse reduction for
  // turning any op output into a checkable scalar.
  Var weighted_sum(Var a, Tensor<T> w) {
    const Tensor<T>& A = val(a);
    PR_CHECK(A.numel() == w.numel(),
             "weighted_sum size mismatch: " << shape_str(A.shape) << " vs "
                                            << shape_str(w.shape));
    double acc = 0.0;
    for (std::size_t i = 0; i < w.numel(); ++i)
      acc += static_cast<double>(A.at(i)) * static_cast<double>(w.at(i));
    return push(Tensor<T>::scalar(static_cast<T>(acc)), "weighted_sum",
                [a, w](Tape& t, Var out) {
                  T g = t.grad_of(out).at(0);
                  Tensor<T>& dA = t.grad(a);
                  for (std::size_t i = 0; i < w.numel(); ++i)
                    dA.at(i) += g * w.at(i);
                });
  }

  // Sum of scalar nodes (loss accumulation across tokens).
  Var sum_scalars(std::span<const Var> xs) {
    PR_CHECK(!xs.empty(), "sum of nothing");
    double acc = 0.0;
    for (Var v : xs) {
      PR_CHECK(val(v).numel() == 1, "sum_scalars wants scalars");
      acc += static_cast<double>(val(v).at(0));
    }
    std::vector<Var> vs(xs.begin(), xs.end());
    return push(Tensor<T>::scalar(static_cast<T>(acc)), "sum_scalars",
                [vs](Tape& t, Var out) {
                  T g = t.grad_of(out).at(0);
                  for (Var v : vs) t.grad(v).at(0) += g;
                });
  }

  // --- backward ---------------------------------------------------------

  // Seeds d(loss)/d(loss) = 1 and replays all recorded closures in reverse
  // execution order.
  void backward(Var loss) {
    PR_CHECK(grad_enabled_, "backward on a gradient-disabled tape");
    PR_CHECK(val(loss).numel() == 1, "backward wants a scalar loss");
    grad(loss).at(0) = T(1);
    for (std::size_t i = nodes_.size(); i-- > 0;) {
      if (nodes_[i].back) nodes_[i].back(*this, Var{i});
    }
  }

 private:
  struct Node {
    Tensor<T> value;
    Tensor<T> grad;
    Parameter<T>* param = nullptr;
    std::function<void(Tape&, Var)> back;
  };

  const Tensor<T>& grad_of(Var v) {
    Node& n = nodes_[v.idx];
    return n.param ? n.param->grad : n.grad;
  }

  template <typename F>
  Var push(Tensor<T> value, const char* op_name, F&& back) {
    ensure_finite(value, op_name);
    Node n;
    if (grad_enabled_) {
      n.grad = Tensor<T>::zeros(value.shape);
      if constexpr (!std::is_same_v<std::decay_t<F>, std::nullptr_t>) {
        n.back = std::forward<F>(back);
      }
    }
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  std::deque<Node> nodes_;
  bool grad_enabled_ = true;
};

}  // namespace pretrand
