#include <random>

#include <benchmark/benchmark.h>

#include "mpeig/eigensolver.hpp"
#include "mpeig/energy.hpp"

namespace {

using namespace mpeig;

Problem square_problem(int n, double p) {
  const double lo[2] = {0.0, 0.0};
  const double hi[2] = {1.0, 1.0};
  const int np[2] = {n, n};
  const GridPtr g = build_grid(2, lo, hi, np);
  return make_problem(g, 0.5, p, Field(g, 0.0), Field(g, 1.0));
}

Field random_field(const GridPtr& g) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> d(0.1, 1.0);
  Field f(g, 0.0);
  for (auto& x : f.values) x = d(rng);
  return f;
}

void BM_KernelBuild(benchmark::State& state) {
  for (auto _ : state) {
    benchmark::DoNotOptimize(square_problem(static_cast<int>(state.range(0)), 1.5));
  }
}
BENCHMARK(BM_KernelBuild)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_EvaluateForms(benchmark::State& state) {
  const Problem prob = square_problem(static_cast<int>(state.range(0)), 1.5);
  const Field u = random_field(prob.grid);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_forms(prob, u));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(prob.size() * prob.size()) / 2);
}
BENCHMARK(BM_EvaluateForms)->Arg(12)->Arg(24);

void BM_GradNumerator(benchmark::State& state) {
  const Problem prob = square_problem(static_cast<int>(state.range(0)), 1.5);
  const Field u = random_field(prob.grid);
  for (auto _ : state) benchmark::DoNotOptimize(grad_numerator(prob, u));
}
BENCHMARK(BM_GradNumerator)->Arg(12)->Arg(24);

void BM_SolvePrincipal(benchmark::State& state) {
  const Problem prob = square_problem(10, state.range(0) / 10.0);
  SolverConfig cfg;
  cfg.tol_residual = 1e-6;
  cfg.max_iters = 200000;
  for (auto _ : state) benchmark::DoNotOptimize(solve_principal(prob, cfg));
}
BENCHMARK(BM_SolvePrincipal)->Arg(15)->Arg(20)->Arg(30)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
