// Microbenchmarks for the hot numeric kernels.
#include <benchmark/benchmark.h>

#include "pretrand/encoder.hpp"
#include "pretrand/rng.hpp"
#include "pretrand/tape.hpp"

using namespace pretrand;

static void BM_MatVec(benchmark::State& state) {
  std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Parameter<float> A("A", Tensor<float>::zeros({n, n}));
  Parameter<float> x("x", Tensor<float>::zeros({n}));
  rng.fill_uniform(A.value, -1.0, 1.0);
  rng.fill_uniform(x.value, -1.0, 1.0);
  for (auto _ : state) {
    Tape<float> t;
    t.set_grad_enabled(false);
    Var y = t.matvec(t.leaf(A), t.leaf(x));
    benchmark::DoNotOptimize(t.val(y).data.data());
  }
}
BENCHMARK(BM_MatVec)->Arg(128)->Arg(512)->Arg(800);

static void BM_MatVecBackward(benchmark::State& state) {
  std::size_t n = static_cast<std::size_t>(state.range(0));
  Rng rng(1);
  Parameter<float> A("A", Tensor<float>::zeros({n, n}));
  Parameter<float> x("x", Tensor<float>::zeros({n}));
  rng.fill_uniform(A.value, -1.0, 1.0);
  rng.fill_uniform(x.value, -1.0, 1.0);
  Tensor<float> w = Tensor<float>::zeros({n});
  rng.fill_uniform(w, -1.0, 1.0);
  for (auto _ : state) {
    Tape<float> t;
    Var y = t.matvec(t.leaf(A), t.leaf(x));
    t.backward(t.weighted_sum(y, w));
    benchmark::DoNotOptimize(A.grad.data.data());
    zero_grads<float>({&A, &x});
  }
}
BENCHMARK(BM_MatVecBackward)->Arg(128)->Arg(512);

static void BM_LstmStep(benchmark::State& state) {
  std::size_t h = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  LstmCell<float> cell;
  cell.init("cell", 2 * h, h, rng);
  Parameter<float> x("x", Tensor<float>::zeros({2 * h}));
  rng.fill_uniform(x.value, -1.0, 1.0);
  for (auto _ : state) {
    Tape<float> t;
    t.set_grad_enabled(false);
    Var h0 = t.zeros({h});
    Var c0 = t.zeros({h});
    auto [h1, c1] = cell.step(t, t.leaf(x), h0, c0);
    benchmark::DoNotOptimize(t.val(h1).data.data());
    benchmark::DoNotOptimize(t.val(c1).data.data());
  }
}
BENCHMARK(BM_LstmStep)->Arg(100)->Arg(200);

BENCHMARK_MAIN();
