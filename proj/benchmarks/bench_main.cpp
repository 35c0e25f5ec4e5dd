// Copyright 2026 The pnflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include <random>

#include "pnflow/base_distributions.hpp"
#include "pnflow/flow_model.hpp"
#include "pnflow/interpolation.hpp"
#include "pnflow/manifold_maps.hpp"
#include "pnflow/training.hpp"

namespace {

using namespace pnflow;

Eigen::VectorXd random_vector(int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXd v(d);
  for (auto& x : v) x = g(rng);
  return v;
}

void BM_SimplexForward(benchmark::State& state) {
  const Eigen::VectorXd z = random_vector(static_cast<int>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(simplex_forward(z));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SimplexForward)->RangeMultiplier(2)->Range(1 << 6, 1 << 12)->Complexity(benchmark::oN);

void BM_SphereForward(benchmark::State& state) {
  const Eigen::VectorXd z = random_vector(static_cast<int>(state.range(0)), 2);
  for (auto _ : state) benchmark::DoNotOptimize(sphere_forward(z));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SphereForward)->RangeMultiplier(2)->Range(1 << 6, 1 << 12)->Complexity(benchmark::oN);

void BM_Slerp(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const Eigen::VectorXd a = random_vector(d, 3).normalized(), b = random_vector(d, 4).normalized();
  for (auto _ : state) benchmark::DoNotOptimize(slerp(a, b, 0.3));
}
BENCHMARK(BM_Slerp)->RangeMultiplier(4)->Range(1 << 6, 1 << 12);

void BM_VmfLogDensity(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const BaseDistribution base = VmfBase::south_pole(d, 2.0 * d);
  const Eigen::VectorXd x = random_vector(d + 1, 5).normalized();
  for (auto _ : state) benchmark::DoNotOptimize(log_density(base, x));
}
BENCHMARK(BM_VmfLogDensity)->RangeMultiplier(4)->Range(1 << 6, 1 << 12);

// Batch of 128 through an (actnorm, permutation, coupling) × 8 chain.
FlowModel bench_model(int d) {
  Rng rng(7);
  Architecture arch;
  arch.steps = 8;
  arch.hidden = {64, 64};
  return FlowModel::build(d, GaussianBase(d), arch, rng);
}

Eigen::MatrixXd bench_batch(int d) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  Eigen::MatrixXd x(128, d);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = g(rng);
  return x;
}

void BM_FlowForward(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const FlowModel m = bench_model(d);
  const Eigen::MatrixXd x = bench_batch(d);
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(x));
  state.SetItemsProcessed(state.iterations() * x.rows());
}
BENCHMARK(BM_FlowForward)->Arg(2)->Arg(16)->Arg(64)->Arg(256);

void BM_FlowGradient(benchmark::State& state) {
  const int d = static_cast<int>(state.range(0));
  const FlowModel m = bench_model(d);
  const Eigen::MatrixXd x = bench_batch(d);
  for (auto _ : state) benchmark::DoNotOptimize(gradient(m, x));
  state.SetItemsProcessed(state.iterations() * x.rows());
}
BENCHMARK(BM_FlowGradient)->Arg(2)->Arg(16)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
