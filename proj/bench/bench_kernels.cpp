// Parallel kernels against the serial reference loops.
// Sizes follow the desk problem (n0=20, n=100, m=200) and an MNIST-sized batch.

#include "ggn/kernels.hpp"

#include <benchmark/benchmark.h>

#include <random>

namespace {

using namespace ggn;

struct Problem {
  Matrix u, v, x;
  Vector w, d, r;
  kernels::HiddenLayer hidden;
  double kappa;
};

Problem make_problem(Eigen::Index n0, Eigen::Index n, Eigen::Index m, Eigen::Index k) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g;
  auto fill = [&](Eigen::Index rows, Eigen::Index cols) {
    Matrix a(rows, cols);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = g(rng);
    return a;
  };
  Problem p;
  p.u = fill(n, n0);
  p.v = fill(n, k);
  p.x = fill(m, n0);
  const Eigen::Index params = n * n0 + n * k;
  p.w = fill(params, 1).cwiseAbs();
  p.d = fill(params, 1);
  p.r = fill(m * k, 1);
  p.kappa = 1.0 / std::sqrt(static_cast<double>(n));
  p.hidden = kernels::hidden_layer(p.u, p.x, Activation::SiLU);
  return p;
}

const Problem& problem(int which) {
  static const Problem desk = make_problem(20, 100, 200, 1);
  static const Problem mnist = make_problem(784, 512, 16, 10);
  return which == 0 ? desk : mnist;
}

template <bool Parallel>
void BM_hidden_layer(benchmark::State& s) {
  const Problem& p = problem(static_cast<int>(s.range(0)));
  for (auto _ : s) {
    auto h = Parallel ? kernels::hidden_layer(p.u, p.x, Activation::SiLU)
                      : kernels::reference::hidden_layer(p.u, p.x, Activation::SiLU);
    benchmark::DoNotOptimize(h.act.data());
  }
}

template <bool Parallel>
void BM_weighted_gram(benchmark::State& s) {
  const Problem& p = problem(static_cast<int>(s.range(0)));
  for (auto _ : s) {
    Matrix g = Parallel ? kernels::weighted_gram(p.hidden, p.v, p.x, p.kappa, p.w)
                        : kernels::reference::weighted_gram(p.hidden, p.v, p.x, p.kappa, p.w);
    benchmark::DoNotOptimize(g.data());
  }
}

template <bool Parallel>
void BM_jacobian_apply(benchmark::State& s) {
  const Problem& p = problem(static_cast<int>(s.range(0)));
  for (auto _ : s) {
    Vector y = Parallel ? kernels::jacobian_apply(p.hidden, p.v, p.x, p.kappa, p.d)
                        : kernels::reference::jacobian_apply(p.hidden, p.v, p.x, p.kappa, p.d);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_transpose_apply(benchmark::State& s) {
  const Problem& p = problem(static_cast<int>(s.range(0)));
  for (auto _ : s) {
    Vector y = Parallel ? kernels::jacobian_transpose_apply(p.hidden, p.v, p.x, p.kappa, p.r)
                        : kernels::reference::jacobian_transpose_apply(p.hidden, p.v, p.x, p.kappa, p.r);
    benchmark::DoNotOptimize(y.data());
  }
}

template <bool Parallel>
void BM_dense_jacobian(benchmark::State& s) {
  const Problem& p = problem(static_cast<int>(s.range(0)));
  for (auto _ : s) {
    Matrix j = Parallel ? kernels::dense_jacobian(p.hidden, p.v, p.x, p.kappa)
                        : kernels::reference::dense_jacobian(p.hidden, p.v, p.x, p.kappa);
    benchmark::DoNotOptimize(j.data());
  }
}

// Argument 0: desk problem, 1: MNIST-sized batch.
#define GGN_BENCH_PAIR(fn)                                                          \
  BENCHMARK_TEMPLATE(fn, true)->Name(#fn "/parallel")->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond); \
  BENCHMARK_TEMPLATE(fn, false)->Name(#fn "/reference")->Arg(0)->Arg(1)->Unit(benchmark::kMicrosecond)

GGN_BENCH_PAIR(BM_hidden_layer);
GGN_BENCH_PAIR(BM_weighted_gram);
GGN_BENCH_PAIR(BM_jacobian_apply);
GGN_BENCH_PAIR(BM_transpose_apply);
GGN_BENCH_PAIR(BM_dense_jacobian);

}  // namespace

BENCHMARK_MAIN();
