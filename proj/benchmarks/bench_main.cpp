#include <benchmark/benchmark.h>

#include <random>

#include "tnop/attention.hpp"
#include "tnop/datagen.hpp"
#include "tnop/models.hpp"
#include "tnop/spectral.hpp"

using namespace tnop;

namespace {

Matrix randn(Eigen::Index r, Eigen::Index c, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> N;
  return Matrix::NullaryExpr(r, c, [&] { return N(g); });
}

// Weighted attention kernel, cost O(N^2 d).
void BM_AttentionKernel(benchmark::State& state) {
  const auto n = state.range(0);
  const Matrix q = randn(n, 16, 1), k = randn(n, 16, 2), v = randn(n, 16, 3);
  const Vector w = Vector::Constant(n, 1.0 / static_cast<double>(n));
  for (auto _ : state) benchmark::DoNotOptimize(attention_kernel(q, k, v, w, 0.25));
  state.SetComplexityN(n);
}
BENCHMARK(BM_AttentionKernel)->RangeMultiplier(2)->Range(64, 2048)->Complexity(benchmark::oNSquared);

void BM_FourierIntegral2d(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const GridSpec grid = GridSpec::uniform({n, n}, true);
  const SampledFunction u(Domain::unit(2), grid, randn(n * n, 8, 4));
  FourierMultiplier R = FourierMultiplier::zeros({4, 4}, 8, 8);
  std::mt19937_64 g(5);
  std::normal_distribution<double> N(0.0, 0.1);
  for (auto& z : R.tensor) z = {N(g), N(g)};
  for (auto _ : state) benchmark::DoNotOptimize(fourier_integral_apply(R, u));
}
BENCHMARK(BM_FourierIntegral2d)->Arg(32)->Arg(64)->Arg(128);

void BM_TnoForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ModelConfig c;
  c.d_model = 64;
  c.layers = 4;
  const ModelParameters p = init_parameters(c, 6);
  const SampledFunction u(Domain::interval(0, 2), GridSpec::uniform({n}), randn(n, 1, 7));
  for (auto _ : state) benchmark::DoNotOptimize(model_forward(p, u));
}
BENCHMARK(BM_TnoForward)->Arg(101)->Arg(201)->Arg(401);

void BM_FanoForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  ModelConfig c;
  c.variant = Variant::FANO;
  c.dim = 2;
  c.d_model = 16;
  c.heads = 2;
  c.layers = 2;
  c.patches = {4, 4};
  c.head_modes = {2, 2};
  const ModelParameters p = init_parameters(c, 8);
  const SampledFunction u(Domain::unit(2), GridSpec::uniform({n, n}, true), randn(n * n, 1, 9));
  for (auto _ : state) benchmark::DoNotOptimize(model_forward(p, u));
}
BENCHMARK(BM_FanoForward)->Arg(32)->Arg(64);

void BM_DarcySolve(benchmark::State& state) {
  DarcySpec s;
  s.resolution = static_cast<int>(state.range(0));
  const auto a = grf_sample(s.grf, Domain::unit(2), GridSpec::uniform({s.resolution, s.resolution}), 10);
  for (auto _ : state) benchmark::DoNotOptimize(darcy_solve(a, s));
}
BENCHMARK(BM_DarcySolve)->Arg(32)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

void BM_KolmogorovStep(benchmark::State& state) {
  KolmogorovSpec s;
  s.resolution = static_cast<int>(state.range(0));
  const KolmogorovSolver solver(s);
  Matrix w = solver.initial_condition(11);
  for (auto _ : state) w = solver.advance(w, 1);
}
BENCHMARK(BM_KolmogorovStep)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
